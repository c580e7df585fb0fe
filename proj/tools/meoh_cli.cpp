#include <iostream>

#include "meoh/runner.hpp"

int main(int argc, char** argv) {
    return meoh::runner::cli_main(argc, argv, std::cout, std::cerr);
}
