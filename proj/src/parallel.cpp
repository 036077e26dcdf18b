#include "hmc/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace hmc
{

unsigned resolve_threads(int requested)
{
    if (requested > 0)
    {
        return static_cast<unsigned>(requested);
    }
    if (char const* env = std::getenv("HMC_THREADS"))
    {
        try
        {
            int const n = std::stoi(env);
            if (n > 0)
            {
                return static_cast<unsigned>(n);
            }
        }
        catch (std::exception const&)
        {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, unsigned threads, std::function<void(std::size_t)> const& body)
{
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (threads == 1)
    {
        for (std::size_t i = 0; i < count; ++i)
        {
            body(i);
        }
        return;
    }

    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::jthread> workers;
    workers.reserve(threads);
    std::size_t const block = (count + threads - 1) / threads;
    for (unsigned w = 0; w < threads; ++w)
    {
        std::size_t const begin = w * block;
        std::size_t const end = std::min(count, begin + block);
        if (begin >= end)
        {
            break;
        }
        workers.emplace_back([&, begin, end] {
            try
            {
                for (std::size_t i = begin; i < end; ++i)
                {
                    body(i);
                }
            }
            catch (...)
            {
                std::lock_guard lock(error_mutex);
                if (!error)
                {
                    error = std::current_exception();
                }
            }
        });
    }
    workers.clear();
    if (error)
    {
        std::rethrow_exception(error);
    }
}

}  // namespace hmc
