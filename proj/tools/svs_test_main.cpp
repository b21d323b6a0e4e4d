#include "svstest/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return svstest::cli::dispatch({argv + 1, argv + argc}, std::cout, std::cerr);
}
