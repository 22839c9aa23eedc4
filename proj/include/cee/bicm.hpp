#pragma once

#include "cee/bicm/ber.hpp"
#include "cee/bicm/beliefs.hpp"
#include "cee/bicm/constellation.hpp"
#include "cee/bicm/conv_code.hpp"
#include "cee/bicm/demapper.hpp"
#include "cee/bicm/interleaver.hpp"
#include "cee/bicm/receiver.hpp"
#include "cee/bicm/siso.hpp"
