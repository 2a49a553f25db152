#pragma once

#include "shadow/amplitude.hpp"
#include "shadow/error.hpp"
#include "shadow/experiment.hpp"
#include "shadow/interferometer.hpp"
#include "shadow/io.hpp"
#include "shadow/layout_io.hpp"
#include "shadow/path_integral.hpp"
#include "shadow/random.hpp"
#include "shadow/streams.hpp"
