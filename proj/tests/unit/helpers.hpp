#pragma once

#include <string>

#include "doctest.h"
#include "domar/error.hpp"

#define CHECK_ERROR_KIND(expr, expected_kind)                        \
  do {                                                               \
    bool thrown_ = false;                                            \
    try {                                                            \
      (void)(expr);                                                  \
    } catch (const domar::Error& e_) {                               \
      thrown_ = true;                                                \
      CHECK_MESSAGE(e_.kind() == (expected_kind), e_.what());        \
    }                                                                \
    CHECK_MESSAGE(thrown_, "expected a domar::Error from " #expr);   \
  } while (0)

#define CHECK_ERROR_TEXT(expr, expected_kind, fragment)                            \
  do {                                                                             \
    bool thrown_ = false;                                                          \
    try {                                                                          \
      (void)(expr);                                                                \
    } catch (const domar::Error& e_) {                                             \
      thrown_ = true;                                                              \
      CHECK_MESSAGE(e_.kind() == (expected_kind), e_.what());                      \
      CHECK_MESSAGE(std::string(e_.what()).find(fragment) != std::string::npos,    \
                    e_.what());                                                    \
    }                                                                              \
    CHECK_MESSAGE(thrown_, "expected a domar::Error from " #expr);                 \
  } while (0)

namespace testing {

inline const char* kHeader = "gvkey,fyear,naics2,sale,cogs,xsga,xrd,ppegt,k_int,capx,icapt\n";

}  // namespace testing
