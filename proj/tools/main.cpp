#include "cli.hpp"

int main(int argc, char** argv) { return evonudge::cli::dispatch(argc, argv); }
