#pragma once

// Umbrella header for the whole library.

#include "amazonnet/checkpoint.hpp"
#include "amazonnet/data.hpp"
#include "amazonnet/errors.hpp"
#include "amazonnet/history.hpp"
#include "amazonnet/image.hpp"
#include "amazonnet/loss.hpp"
#include "amazonnet/metrics.hpp"
#include "amazonnet/nn.hpp"
#include "amazonnet/optim.hpp"
#include "amazonnet/predict.hpp"
#include "amazonnet/recovery.hpp"
#include "amazonnet/rng.hpp"
#include "amazonnet/synth.hpp"
#include "amazonnet/tensor.hpp"
#include "amazonnet/train.hpp"
#include "amazonnet/unet.hpp"
