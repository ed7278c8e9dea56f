// runs a shell command and compares its exit status against the expected
// code; used by ctest to pin the CLI's exit-code contract

#include <cstdio>
#include <cstdlib>
#include <string>

int main(int argc, char** argv) {
    if (argc != 3) {
        std::fprintf(stderr, "usage: cli_check <expected-exit> <command>\n");
        return 99;
    }
    const int want = std::atoi(argv[1]);
    const int rc = std::system(argv[2]);
    const int got = rc < 0 ? -1 : WEXITSTATUS(rc);
    if (got != want) {
        std::fprintf(stderr, "expected exit %d, got %d for: %s\n", want, got,
                     argv[2]);
        return 1;
    }
    return 0;
}
