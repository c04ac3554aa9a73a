#pragma once

#include <cstddef>
#include <vector>

#include <atomic>
#include <functional>
#include <thread>

namespace spdcq {

/// Deterministic parallel map-reduce: the index range is cut into fixed-size
/// tiles whose boundaries do not depend on the worker count, each tile is
/// reduced into its own slot, and the slots are combined in tile order. The
/// result is therefore bitwise identical for any `threads` value.
template <typename Result, typename TileFn, typename CombineFn>
Result parallel_tiles(std::size_t count, std::size_t tile_size, int threads,
                      const Result& init, TileFn&& tile_fn, CombineFn&& combine) {
    if (count == 0) return init;
    if (tile_size == 0) tile_size = 1;
    const std::size_t n_tiles = (count + tile_size - 1) / tile_size;

    unsigned hw = std::thread::hardware_concurrency();
    std::size_t n_workers = threads > 0 ? static_cast<std::size_t>(threads)
                                        : static_cast<std::size_t>(hw > 0 ? hw : 1);
    if (n_workers > n_tiles) n_workers = n_tiles;

    std::vector<Result> partial(n_tiles, init);
    auto run_tile = [&](std::size_t t) {
        const std::size_t begin = t * tile_size;
        const std::size_t end = begin + tile_size < count ? begin + tile_size : count;
        tile_fn(begin, end, partial[t]);
    };

    if (n_workers <= 1) {
        for (std::size_t t = 0; t < n_tiles; ++t) run_tile(t);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (std::size_t w = 0; w < n_workers; ++w) {
            pool.emplace_back([&] {
                for (;;) {
                    const std::size_t t = next.fetch_add(1);
                    if (t >= n_tiles) break;
                    run_tile(t);
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    Result total = init;
    for (std::size_t t = 0; t < n_tiles; ++t) combine(total, partial[t]);
    return total;
}

}  // namespace spdcq
