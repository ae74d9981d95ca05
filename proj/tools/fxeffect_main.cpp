#include "fxeffect/cli.hpp"

int main(int argc, char** argv) { return fxeffect::cli::run(argc, argv); }
