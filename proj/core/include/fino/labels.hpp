#pragma once

#include <array>
#include <string>

#include "fino/errors.hpp"

namespace fino {

enum class Label { success, collision, miss, overflow, spill, overturn };
enum class ActionName { push, pick_place, pour, put_in_container, stack };
enum class DetectionLabel { success, fail };

// Declared class ordering contract: confusion matrices and score vectors
// always use this order.
inline constexpr std::array<Label, 6> kAllLabels = {
    Label::success, Label::collision, Label::miss,
    Label::overflow, Label::spill, Label::overturn};
inline constexpr std::array<Label, 5> kFailureLabels = {
    Label::collision, Label::miss, Label::overflow, Label::spill, Label::overturn};
inline constexpr std::array<ActionName, 5> kAllActions = {
    ActionName::push, ActionName::pick_place, ActionName::pour,
    ActionName::put_in_container, ActionName::stack};

inline std::string to_string(Label l) {
    switch (l) {
        case Label::success: return "success";
        case Label::collision: return "collision";
        case Label::miss: return "miss";
        case Label::overflow: return "overflow";
        case Label::spill: return "spill";
        case Label::overturn: return "overturn";
    }
    return "?";
}

inline std::string to_string(ActionName a) {
    switch (a) {
        case ActionName::push: return "push";
        case ActionName::pick_place: return "pick_place";
        case ActionName::pour: return "pour";
        case ActionName::put_in_container: return "put_in_container";
        case ActionName::stack: return "stack";
    }
    return "?";
}

inline Label label_from_string(const std::string& s) {
    for (Label l : kAllLabels)
        if (to_string(l) == s) return l;
    throw SchemaViolation("unknown label: " + s);
}

inline ActionName action_from_string(const std::string& s) {
    for (ActionName a : kAllActions)
        if (to_string(a) == s) return a;
    throw SchemaViolation("unknown action: " + s);
}

// Legal (action, label) combinations: overflow and spill occur only with
// pour; collision, miss and overturn never with pour; overturn also never
// with put_in_container.
inline bool is_legal_pair(ActionName action, Label label) {
    switch (label) {
        case Label::success: return true;
        case Label::overflow:
        case Label::spill: return action == ActionName::pour;
        case Label::collision:
        case Label::miss: return action != ActionName::pour;
        case Label::overturn:
            return action != ActionName::pour && action != ActionName::put_in_container;
    }
    return false;
}

inline DetectionLabel derive_detection_label(Label label) {
    return label == Label::success ? DetectionLabel::success : DetectionLabel::fail;
}

}  // namespace fino
