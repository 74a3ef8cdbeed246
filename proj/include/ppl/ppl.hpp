#ifndef PPL_PPL_HPP
#define PPL_PPL_HPP

#include "ppl/distribution.hpp"
#include "ppl/inference.hpp"
#include "ppl/library.hpp"
#include "ppl/module.hpp"
#include "ppl/reader.hpp"
#include "ppl/stat.hpp"
#include "ppl/value.hpp"

#endif  // PPL_PPL_HPP
