#pragma once

#include "dualgi/box_qp.hpp"
#include "dualgi/config.hpp"
#include "dualgi/error.hpp"
#include "dualgi/experiment.hpp"
#include "dualgi/gain_analysis.hpp"
#include "dualgi/haar.hpp"
#include "dualgi/imaging_model.hpp"
#include "dualgi/io.hpp"
#include "dualgi/linalg.hpp"
#include "dualgi/noise_model.hpp"
#include "dualgi/photon_sim.hpp"
#include "dualgi/reduction.hpp"
