#include "cohimpact/cli.hpp"

int main(int argc, char** argv) { return cohimpact::cli::main(argc, argv); }
