#ifndef NLSMOOTH_NLSMOOTH_HPP
#define NLSMOOTH_NLSMOOTH_HPP

#include "certificate.hpp"
#include "classify.hpp"
#include "conditions.hpp"
#include "consistency.hpp"
#include "io.hpp"
#include "model.hpp"
#include "oracle.hpp"
#include "pencil.hpp"
#include "spectrum.hpp"
#include "verdict.hpp"

#endif  // NLSMOOTH_NLSMOOTH_HPP
