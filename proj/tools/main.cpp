#include <string>
#include <vector>

#include "lazygnn/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return lazygnn::run_cli(args);
}
