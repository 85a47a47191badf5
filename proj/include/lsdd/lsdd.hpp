#pragma once

#include "applications.hpp"
#include "csv.hpp"
#include "density_difference.hpp"
#include "divergence.hpp"
#include "error.hpp"
#include "experiment.hpp"
#include "kde.hpp"
#include "kernel_core.hpp"
#include "kliep.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "sample_set.hpp"
#include "synthetic.hpp"
#include "two_sample.hpp"
