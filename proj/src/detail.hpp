#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace tortrust::detail {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

/// Strongly connected components that contain a cycle (size > 1, or a
/// self-loop), each sorted ascending; components ordered by smallest member.
std::vector<std::vector<std::size_t>> cyclic_components(
    std::size_t n, const std::function<std::span<const std::size_t>(std::size_t)>& successors);

}  // namespace tortrust::detail
