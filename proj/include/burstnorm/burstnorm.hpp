#pragma once

#include "burstnorm/errors.hpp"
#include "burstnorm/experiment.hpp"
#include "burstnorm/hinf.hpp"
#include "burstnorm/markov.hpp"
#include "burstnorm/mjls.hpp"
#include "burstnorm/model_io.hpp"
#include "burstnorm/numerics.hpp"
#include "burstnorm/sdp.hpp"
