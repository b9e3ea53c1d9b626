#pragma once

#include "lipkit/annotations.hpp"
#include "lipkit/augment.hpp"
#include "lipkit/error.hpp"
#include "lipkit/image.hpp"
#include "lipkit/roi.hpp"
#include "lipkit/rover.hpp"
#include "lipkit/scoring.hpp"
#include "lipkit/transcripts.hpp"
