#pragma once

#include "btd/errors.hpp"
#include "btd/tensor.hpp"
#include "btd/model.hpp"
#include "btd/orthonormalize.hpp"
#include "btd/sigma_update.hpp"
#include "btd/asu.hpp"
#include "btd/split.hpp"
#include "btd/als.hpp"
#include "btd/synthetic.hpp"
