#pragma once

// Umbrella header for the adaptive-convolution RGB-D pipeline.

#include "argbd/adam.hpp"
#include "argbd/bilateral.hpp"
#include "argbd/checkpoint.hpp"
#include "argbd/completion.hpp"
#include "argbd/conv.hpp"
#include "argbd/dataset.hpp"
#include "argbd/filter_map.hpp"
#include "argbd/grad_check.hpp"
#include "argbd/gradcheck_suite.hpp"
#include "argbd/layers.hpp"
#include "argbd/losses.hpp"
#include "argbd/metrics.hpp"
#include "argbd/model.hpp"
#include "argbd/pipeline.hpp"
#include "argbd/png_io.hpp"
#include "argbd/rgbd.hpp"
#include "argbd/super_resolution.hpp"
#include "argbd/tensor.hpp"
#include "argbd/train.hpp"
