#include <string>
#include <vector>

#include "gradcodec/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return gradcodec::cli::run(args);
}
