#include "ppl/cli.hpp"

int main(int argc, char** argv) { return ppl::cli::main(argc, argv); }
