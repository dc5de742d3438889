#pragma once

#include "m3svm/error.hpp"
#include "m3svm/dataset.hpp"
#include "m3svm/model.hpp"
#include "m3svm/objective.hpp"
#include "m3svm/optim.hpp"
#include "m3svm/baselines.hpp"
#include "m3svm/experiment.hpp"
#include "m3svm/serialize.hpp"
#include "m3svm/verify.hpp"
#include "m3svm/run_config.hpp"
