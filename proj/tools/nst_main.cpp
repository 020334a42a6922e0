#include "nst/cli.hpp"

int main(int argc, char** argv) { return nst::cli::run(argc, argv); }
