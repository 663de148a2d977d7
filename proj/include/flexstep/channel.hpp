#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string_view>

namespace flexstep
{
    enum class LogKind : std::uint8_t
    {
        Load,
        Store,
        AmoPart,
    };

    std::string_view to_string(LogKind k) noexcept;

    // One memory-access log record, in commit order. Multi-part instructions
    // (atomics) occupy `total` contiguous entries numbered part = 1..total.
    struct MemLogEntry
    {
        std::uint64_t seq = 0;
        LogKind kind = LogKind::Load;
        std::uint64_t addr = 0;
        std::uint64_t data = 0;
        std::uint8_t part = 0;
        std::uint8_t total = 0;

        friend bool operator==(const MemLogEntry&, const MemLogEntry&) = default;
    };

    enum class WordKind : std::uint8_t
    {
        Scp,
        Entry,
        Ic,
        Ecp,
    };

    std::string_view to_string(WordKind k) noexcept;

    // A unit of channel traffic. Checkpoints travel as RegCheckpoint::kWords
    // separate words; `index` is the word position within the checkpoint, or
    // the entry ordinal within the segment for Entry words.
    struct ChannelWord
    {
        WordKind kind = WordKind::Entry;
        std::uint32_t segment = 0;
        std::uint32_t index = 0;
        std::uint64_t value = 0; // checkpoint word or instruction count
        MemLogEntry entry;       // Entry words only
        std::uint64_t enqueue_cycle = 0;

        friend bool operator==(const ChannelWord&, const ChannelWord&) = default;
    };

    // Bounded strict-FIFO data buffer between a main core and one checker core.
    class FifoChannel
    {
    public:
        explicit FifoChannel(std::size_t capacity);

        std::size_t capacity() const noexcept { return capacity_; }
        std::size_t occupancy() const noexcept { return words_.size(); }
        bool full() const noexcept { return words_.size() >= capacity_; }
        bool empty() const noexcept { return words_.empty(); }

        // False (and no state change) when full.
        bool try_push(const ChannelWord& w);
        std::optional<ChannelWord> pop();
        const ChannelWord* front() const noexcept { return words_.empty() ? nullptr : &words_.front(); }

        std::uint64_t pushed() const noexcept { return pushed_; }
        std::uint64_t popped() const noexcept { return popped_; }
        std::uint64_t rejected() const noexcept { return rejected_; }
        std::size_t max_occupancy() const noexcept { return max_occupancy_; }

    private:
        std::size_t capacity_;
        std::deque<ChannelWord> words_;
        std::uint64_t pushed_ = 0;
        std::uint64_t popped_ = 0;
        std::uint64_t rejected_ = 0;
        std::size_t max_occupancy_ = 0;
    };
} // namespace flexstep
