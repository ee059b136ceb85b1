#include "probopt/cli.hpp"

int main(int argc, char** argv) { return probopt::cli::run(argc, argv); }
