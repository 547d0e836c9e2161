#pragma once

// Everything except file I/O and the batch front end, which pull in libpng.

#include "sieva/core.hpp"
#include "sieva/losses.hpp"
#include "sieva/metrics.hpp"
#include "sieva/partition.hpp"
#include "sieva/pbacc.hpp"
