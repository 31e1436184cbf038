#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "pcam/tensor.hpp"

namespace pcam {

// One grayscale sample. mask is empty unless the sample is a full image
// with localization ground truth ([1,h,w], values 0 or 1).
struct Sample {
  Tensor image;  // [1,h,w], values in [0,1]
  std::size_t label = 0;
  Tensor mask;
};

// Label indices are positions in class_names; loaders assign them in
// sorted name order.
struct Dataset {
  std::vector<std::string> class_names;
  std::vector<Sample> samples;
};

}  // namespace pcam
