#include <iostream>
#include <string>
#include <vector>

#include "shapeshot/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return shapeshot::cli_dispatch(args, std::cout, std::cerr);
}
