#pragma once

// Umbrella header for the whole library.

#include "multiport/matrix.hpp"
#include "multiport/interference.hpp"
#include "multiport/counts.hpp"
#include "multiport/nelder_mead.hpp"
#include "multiport/reconstruction.hpp"
#include "multiport/uncertainty.hpp"
#include "multiport/io.hpp"
#include "multiport/fixtures.hpp"
