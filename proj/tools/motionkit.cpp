#include "motionkit/cli/run.hpp"

int main(int argc, char** argv) { return motionkit::cli::run(argc, argv); }
