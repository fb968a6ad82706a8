#pragma once

// The tensor backend's logging shims define glog-style CHECK/DCHECK macros
// that collide with doctest's assertions of the same names. Pull the backend
// in first, drop its macros, and let doctest own them inside test code.
// Every test translation unit that touches torch must include this header
// instead of <doctest.h> and <torch/torch.h> separately.

#include <torch/torch.h>

#ifdef CHECK
#undef CHECK
#endif
#ifdef CHECK_EQ
#undef CHECK_EQ
#endif
#ifdef CHECK_NE
#undef CHECK_NE
#endif
#ifdef CHECK_LE
#undef CHECK_LE
#endif
#ifdef CHECK_LT
#undef CHECK_LT
#endif
#ifdef CHECK_GE
#undef CHECK_GE
#endif
#ifdef CHECK_GT
#undef CHECK_GT
#endif
#ifdef DCHECK
#undef DCHECK
#endif

#include <doctest.h>
