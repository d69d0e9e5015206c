#pragma once

#include "threshlogit/bfgs.hpp"
#include "threshlogit/errors.hpp"
#include "threshlogit/estimation.hpp"
#include "threshlogit/io.hpp"
#include "threshlogit/likelihood.hpp"
#include "threshlogit/model.hpp"
#include "threshlogit/modelcompare.hpp"
#include "threshlogit/random.hpp"
#include "threshlogit/synthetic.hpp"
#include "threshlogit/transforms.hpp"
#include "threshlogit/wtp.hpp"
