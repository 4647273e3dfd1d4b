#include <affectsim/cli.hpp>

int main(int argc, char** argv) { return affectsim::cli::run(argc, argv); }
