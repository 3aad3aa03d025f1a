#include "cli.hpp"

int main(int argc, char** argv) { return refiner::cli::run(argc, argv); }
