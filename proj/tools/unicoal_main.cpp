#include <cstdio>

int main() {
    std::puts("unicoal: subcommands not wired up yet");
    return 0;
}
