#include "qsdlab/cli.hpp"

int main(int argc, char** argv) { return qsd::cli::run(argc, argv); }
