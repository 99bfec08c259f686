#pragma once

// libtorch defines its own CHECK macro; it must be seen before doctest so doctest's wins.
#include <torch/torch.h>

#undef CHECK
#include <doctest.h>
