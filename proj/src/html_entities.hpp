#pragma once

#include <cstddef>
#include <optional>
#include <string_view>

namespace phishagent::detail {

std::optional<char32_t> lookup_named_entity(std::string_view name);
std::size_t named_entity_count();

}  // namespace phishagent::detail
