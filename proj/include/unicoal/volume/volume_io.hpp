#pragma once

#include <zlib.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "unicoal/common.hpp"
#include "unicoal/volume/volume.hpp"

namespace unicoal {

// ---- NIfTI-1 (single-file .nii / .nii.gz) -----------------------------------
//
// Minimal reader/writer: little-endian, no orientation matrices beyond
// pixdim, modality carried in intent_name. Data written as float32.

namespace nifti_detail {

#pragma pack(push, 1)
struct Nifti1Header {
    int32_t sizeof_hdr;
    char data_type[10];
    char db_name[18];
    int32_t extents;
    int16_t session_error;
    char regular;
    char dim_info;
    int16_t dim[8];
    float intent_p1, intent_p2, intent_p3;
    int16_t intent_code;
    int16_t datatype;
    int16_t bitpix;
    int16_t slice_start;
    float pixdim[8];
    float vox_offset;
    float scl_slope;
    float scl_inter;
    int16_t slice_end;
    char slice_code;
    char xyzt_units;
    float cal_max, cal_min;
    float slice_duration;
    float toffset;
    int32_t glmax, glmin;
    char descrip[80];
    char aux_file[24];
    int16_t qform_code, sform_code;
    float quatern_b, quatern_c, quatern_d;
    float qoffset_x, qoffset_y, qoffset_z;
    float srow_x[4], srow_y[4], srow_z[4];
    char intent_name[16];
    char magic[4];
};
#pragma pack(pop)
static_assert(sizeof(Nifti1Header) == 348, "NIfTI-1 header must be 348 bytes");

} // namespace nifti_detail

inline bool has_suffix(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

inline MRVolume read_nifti(const std::string& path) {
    // gzread handles plain files transparently, so one path covers .nii and .nii.gz.
    gzFile f = gzopen(path.c_str(), "rb");
    check_user(f != nullptr, "cannot open volume file: " + path);

    nifti_detail::Nifti1Header h{};
    check_user(gzread(f, &h, sizeof(h)) == int(sizeof(h)), "truncated NIfTI header: " + path);
    check_user(h.sizeof_hdr == 348, "not a little-endian NIfTI-1 file: " + path);
    check_user(std::strncmp(h.magic, "n+1", 3) == 0, "only single-file NIfTI supported: " + path);
    check_user(h.dim[0] >= 2 && h.dim[0] <= 4, "expected a 3-d NIfTI volume: " + path);
    const int64_t nx = h.dim[1], ny = h.dim[0] >= 2 ? h.dim[2] : 1, nz = h.dim[0] >= 3 ? h.dim[3] : 1;
    const int64_t nt = h.dim[0] >= 4 ? std::max<int64_t>(1, h.dim[4]) : 1;
    check_user(nt == 1, "4-d NIfTI volumes are not supported: " + path);

    const int64_t voxels = nx * ny * nz;
    const int64_t skip = int64_t(h.vox_offset) - int64_t(sizeof(h));
    if (skip > 0) {
        std::vector<char> tmp(static_cast<size_t>(skip), '\0');
        check_user(gzread(f, tmp.data(), unsigned(skip)) == int(skip), "truncated NIfTI: " + path);
    }

    const int bpp = h.bitpix / 8;
    std::vector<char> raw(size_t(voxels * bpp));
    check_user(gzread(f, raw.data(), unsigned(raw.size())) == int(raw.size()),
               "truncated NIfTI data: " + path);
    gzclose(f);

    MRVolume vol;
    vol.voxels = Tensor({nz, ny, nx});
    double* out = vol.voxels.data();
    auto convert = [&](auto* src) {
        for (int64_t i = 0; i < voxels; ++i) out[i] = double(src[i]);
    };
    switch (h.datatype) {
        case 2: convert(reinterpret_cast<uint8_t*>(raw.data())); break;
        case 4: convert(reinterpret_cast<int16_t*>(raw.data())); break;
        case 8: convert(reinterpret_cast<int32_t*>(raw.data())); break;
        case 16: convert(reinterpret_cast<float*>(raw.data())); break;
        case 64: convert(reinterpret_cast<double*>(raw.data())); break;
        case 256: convert(reinterpret_cast<int8_t*>(raw.data())); break;
        case 512: convert(reinterpret_cast<uint16_t*>(raw.data())); break;
        default: throw UserError("unsupported NIfTI datatype " + std::to_string(h.datatype));
    }
    if (h.scl_slope != 0.0f && (h.scl_slope != 1.0f || h.scl_inter != 0.0f))
        for (int64_t i = 0; i < voxels; ++i) out[i] = out[i] * h.scl_slope + h.scl_inter;

    vol.inplane_spacing_mm = {h.pixdim[1] > 0 ? h.pixdim[1] : 1.0, h.pixdim[2] > 0 ? h.pixdim[2] : 1.0};
    vol.thickness_mm = h.pixdim[3] > 0 ? h.pixdim[3] : 1.0;
    char name[17] = {};
    std::memcpy(name, h.intent_name, 16);
    vol.modality = name;
    vol.id = std::filesystem::path(path).filename().string();
    return vol;
}

inline void write_nifti(const std::string& path, const MRVolume& vol) {
    vol.validate();
    nifti_detail::Nifti1Header h{};
    h.sizeof_hdr = 348;
    h.regular = 'r';
    h.dim[0] = 3;
    h.dim[1] = int16_t(vol.width());
    h.dim[2] = int16_t(vol.height());
    h.dim[3] = int16_t(vol.slices());
    for (int i = 4; i < 8; ++i) h.dim[i] = 1;
    h.datatype = 16; // float32
    h.bitpix = 32;
    h.pixdim[0] = 1.0f;
    h.pixdim[1] = float(vol.inplane_spacing_mm.first);
    h.pixdim[2] = float(vol.inplane_spacing_mm.second);
    h.pixdim[3] = float(vol.thickness_mm);
    h.vox_offset = 352.0f;
    h.scl_slope = 1.0f;
    h.xyzt_units = 2; // millimetres
    std::snprintf(h.descrip, sizeof(h.descrip), "unicoal volume modality=%s",
                  vol.modality.c_str());
    std::strncpy(h.intent_name, vol.modality.c_str(), sizeof(h.intent_name) - 1);
    std::memcpy(h.magic, "n+1", 4);

    std::vector<float> data(size_t(vol.voxels.numel()));
    for (int64_t i = 0; i < vol.voxels.numel(); ++i) data[size_t(i)] = float(vol.voxels[i]);
    const char pad[4] = {0, 0, 0, 0};

    if (has_suffix(path, ".gz")) {
        gzFile f = gzopen(path.c_str(), "wb");
        check_user(f != nullptr, "cannot write: " + path);
        gzwrite(f, &h, sizeof(h));
        gzwrite(f, pad, 4);
        gzwrite(f, data.data(), unsigned(data.size() * sizeof(float)));
        gzclose(f);
    } else {
        std::ofstream f(path, std::ios::binary);
        check_user(f.good(), "cannot write: " + path);
        f.write(reinterpret_cast<const char*>(&h), sizeof(h));
        f.write(pad, 4);
        f.write(reinterpret_cast<const char*>(data.data()),
                std::streamsize(data.size() * sizeof(float)));
        check_user(f.good(), "short write: " + path);
    }
}

// ---- raw container (.json sidecar + .raw float64) ---------------------------

inline std::string raw_path_for(const std::string& json_path) {
    std::filesystem::path p(json_path);
    p.replace_extension(".raw");
    return p.string();
}

inline MRVolume read_raw_container(const std::string& json_path) {
    std::ifstream jf(json_path);
    check_user(jf.good(), "cannot open sidecar: " + json_path);
    nlohmann::json j;
    jf >> j;
    check_user(j.contains("shape") && j["shape"].size() == 3, "sidecar missing 3-d shape");

    MRVolume vol;
    const int64_t S = j["shape"][0], H = j["shape"][1], W = j["shape"][2];
    vol.voxels = Tensor({S, H, W});
    vol.modality = j.value("modality", "");
    vol.thickness_mm = j.value("thickness_mm", 1.0);
    if (j.contains("inplane_spacing_mm"))
        vol.inplane_spacing_mm = {j["inplane_spacing_mm"][0], j["inplane_spacing_mm"][1]};
    vol.id = j.value("id", std::filesystem::path(json_path).stem().string());

    std::ifstream rf(raw_path_for(json_path), std::ios::binary);
    check_user(rf.good(), "cannot open raw data: " + raw_path_for(json_path));
    rf.read(reinterpret_cast<char*>(vol.voxels.data()),
            std::streamsize(vol.voxels.numel() * sizeof(double)));
    check_user(rf.gcount() == std::streamsize(vol.voxels.numel() * sizeof(double)),
               "raw data truncated: " + raw_path_for(json_path));
    return vol;
}

inline void write_raw_container(const std::string& json_path, const MRVolume& vol) {
    vol.validate();
    nlohmann::json j;
    j["shape"] = {vol.slices(), vol.height(), vol.width()};
    j["dtype"] = "float64";
    j["order"] = "SHW-row-major";
    j["modality"] = vol.modality;
    j["thickness_mm"] = vol.thickness_mm;
    j["inplane_spacing_mm"] = {vol.inplane_spacing_mm.first, vol.inplane_spacing_mm.second};
    j["id"] = vol.id;
    std::ofstream jf(json_path);
    check_user(jf.good(), "cannot write sidecar: " + json_path);
    jf << j.dump(2) << "\n";

    std::ofstream rf(raw_path_for(json_path), std::ios::binary);
    check_user(rf.good(), "cannot write raw data: " + raw_path_for(json_path));
    rf.write(reinterpret_cast<const char*>(vol.voxels.data()),
             std::streamsize(vol.voxels.numel() * sizeof(double)));
}

// ---- format dispatch ---------------------------------------------------------

inline MRVolume read_volume(const std::string& path) {
    if (has_suffix(path, ".nii") || has_suffix(path, ".nii.gz")) return read_nifti(path);
    if (has_suffix(path, ".json")) return read_raw_container(path);
    throw UserError("unknown volume format (expect .nii, .nii.gz or .json): " + path);
}

inline void write_volume(const std::string& path, const MRVolume& vol) {
    if (has_suffix(path, ".nii") || has_suffix(path, ".nii.gz")) return write_nifti(path, vol);
    if (has_suffix(path, ".json")) return write_raw_container(path, vol);
    throw UserError("unknown volume format (expect .nii, .nii.gz or .json): " + path);
}

} // namespace unicoal
