#pragma once

#include "retrocast/bootstrap.hpp"
#include "retrocast/conv_matrix.hpp"
#include "retrocast/csv.hpp"
#include "retrocast/dates.hpp"
#include "retrocast/deconv.hpp"
#include "retrocast/errors.hpp"
#include "retrocast/identify.hpp"
#include "retrocast/kernel.hpp"
#include "retrocast/model_select.hpp"
#include "retrocast/nnls.hpp"
#include "retrocast/penalty.hpp"
#include "retrocast/pipeline.hpp"
#include "retrocast/report.hpp"
#include "retrocast/rng.hpp"
#include "retrocast/series.hpp"
#include "retrocast/simplex.hpp"
