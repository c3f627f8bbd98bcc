#include "cqpm/cli.hpp"

int main(int argc, char** argv) { return cqpm::cli::run(argc, argv); }
