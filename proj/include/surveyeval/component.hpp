#pragma once

#include <string_view>

namespace surveyeval {

// The three evaluated facets of a survey.
enum class Component { outline = 0, content = 1, reference = 2 };

inline constexpr Component kComponents[] = {Component::outline, Component::content, Component::reference};

std::string_view to_string(Component c);
Component component_from_string(std::string_view s);

}  // namespace surveyeval
