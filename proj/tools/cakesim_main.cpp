#include <string>
#include <vector>

#include "cakesim/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return cakesim::run_cli(args);
}
