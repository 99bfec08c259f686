#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "caif/common/log.h"

int main(int argc, char** argv)
{
	caif::log::set_level(caif::log::Level::error);
	doctest::Context context(argc, argv);
	return context.run();
}
