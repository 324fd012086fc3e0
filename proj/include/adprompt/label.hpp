#pragma once

#include <string>
#include <string_view>

#include "adprompt/errors.hpp"

namespace adprompt {

// Diagnostic class of a subject. AD encodes y=1, HC encodes y=0.
enum class ClassLabel { AD, HC };

inline std::string to_string(ClassLabel label) {
  return label == ClassLabel::AD ? "AD" : "HC";
}

inline ClassLabel class_label_from_string(std::string_view s) {
  if (s == "AD") return ClassLabel::AD;
  if (s == "HC") return ClassLabel::HC;
  throw DataError("unknown class label '" + std::string(s) + "' (expected AD or HC)");
}

}  // namespace adprompt
