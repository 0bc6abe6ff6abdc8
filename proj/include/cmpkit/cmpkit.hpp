#pragma once

#include "cmpkit/accumulators.hpp"
#include "cmpkit/bessel.hpp"
#include "cmpkit/distributions.hpp"
#include "cmpkit/moments.hpp"
#include "cmpkit/params.hpp"
#include "cmpkit/series.hpp"
#include "cmpkit/stein.hpp"
#include "cmpkit/study.hpp"
#include "cmpkit/transforms.hpp"
