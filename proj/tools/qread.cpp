#include "qread/cli.hpp"

int main(int argc, char** argv) { return qread::cli::main(argc, argv); }
