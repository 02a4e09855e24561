#include "cli.hpp"

int main(int argc, char** argv) { return ssi::cli::dispatch(argc, argv); }
