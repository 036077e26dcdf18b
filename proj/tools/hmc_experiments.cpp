#include "hmc/cli.hpp"

int main(int argc, char** argv)
{
    return hmc::cli::run(argc, argv);
}
