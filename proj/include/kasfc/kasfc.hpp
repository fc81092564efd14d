#pragma once

#include "kasfc/digits.hpp"
#include "kasfc/encodings.hpp"
#include "kasfc/errors.hpp"
#include "kasfc/fraction.hpp"
#include "kasfc/measure.hpp"
#include "kasfc/outer.hpp"
#include "kasfc/random.hpp"
#include "kasfc/registry.hpp"
#include "kasfc/relunet.hpp"
#include "kasfc/serialize.hpp"
