#pragma once

#include "mloc/common.hpp"
#include "mloc/detect.hpp"
#include "mloc/dtw.hpp"
#include "mloc/eval.hpp"
#include "mloc/io.hpp"
#include "mloc/locate.hpp"
#include "mloc/map_builder.hpp"
#include "mloc/matching.hpp"
#include "mloc/signal.hpp"
#include "mloc/simulate.hpp"
#include "mloc/types.hpp"
