#pragma once

// Umbrella header for the multimodal tensor-fusion toolkit.

#include "mmf/autodiff.hpp"
#include "mmf/checkpoint.hpp"
#include "mmf/commands.hpp"
#include "mmf/config.hpp"
#include "mmf/data.hpp"
#include "mmf/encoders.hpp"
#include "mmf/errors.hpp"
#include "mmf/fusion.hpp"
#include "mmf/init.hpp"
#include "mmf/metrics.hpp"
#include "mmf/model.hpp"
#include "mmf/optim.hpp"
#include "mmf/rng.hpp"
#include "mmf/sweep.hpp"
#include "mmf/synthetic.hpp"
#include "mmf/tensor.hpp"
#include "mmf/textio.hpp"
#include "mmf/train.hpp"
