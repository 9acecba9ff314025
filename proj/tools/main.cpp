#include "cli.hpp"

int main(int argc, char** argv) { return sbell::cli::main(argc, argv); }
