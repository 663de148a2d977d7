#include "flexstep/channel.hpp"

#include "flexstep/model.hpp"

#include <algorithm>

namespace flexstep
{
    std::string_view to_string(LogKind k) noexcept
    {
        switch (k)
        {
        case LogKind::Load: return "load";
        case LogKind::Store: return "store";
        case LogKind::AmoPart: return "amo";
        }
        return "?";
    }

    std::string_view to_string(WordKind k) noexcept
    {
        switch (k)
        {
        case WordKind::Scp: return "scp";
        case WordKind::Entry: return "entry";
        case WordKind::Ic: return "ic";
        case WordKind::Ecp: return "ecp";
        }
        return "?";
    }

    FifoChannel::FifoChannel(std::size_t capacity) : capacity_(capacity)
    {
        if (capacity == 0) throw InvalidArgument("FifoChannel: capacity must be >= 1");
    }

    bool FifoChannel::try_push(const ChannelWord& w)
    {
        if (full())
        {
            ++rejected_;
            return false;
        }
        words_.push_back(w);
        ++pushed_;
        max_occupancy_ = std::max(max_occupancy_, words_.size());
        return true;
    }

    std::optional<ChannelWord> FifoChannel::pop()
    {
        if (words_.empty()) return std::nullopt;
        ChannelWord w = std::move(words_.front());
        words_.pop_front();
        ++popped_;
        return w;
    }
} // namespace flexstep
