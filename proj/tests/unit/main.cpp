#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "cssi/experiment.hpp"

int main(int argc, char** argv) {
    cssi::tune_allocator();
    doctest::Context ctx(argc, argv);
    return ctx.run();
}
