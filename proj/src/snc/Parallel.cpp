#include "nnv/Parallel.h"

#include "nnv/Error.h"

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>

namespace nnv {

const char *dividerName( DividerKind kind )
{
    switch ( kind )
    {
    case DividerKind::Auto:
        return "auto";
    case DividerKind::Input:
        return "input";
    case DividerKind::Constraint:
        return "constraint";
    }
    return "?";
}

namespace {

constexpr unsigned kInputDividerMaxDimension = 10;

bool inputsBounded( const Query &query )
{
    if ( query.inputVariables.empty() )
        return false;
    for ( VariableId v : query.inputVariables )
        if ( !std::isfinite( query.bounds.lower( v ) ) || !std::isfinite( query.bounds.upper( v ) ) )
            return false;
    return true;
}

using Clock = std::chrono::steady_clock;

double secondsSince( Clock::time_point start )
{
    return std::chrono::duration<double>( Clock::now() - start ).count();
}

} // namespace

DividerKind chooseDivider( const Query &query, DividerKind requested )
{
    bool inputApplicable = inputsBounded( query );
    if ( requested == DividerKind::Input )
        return inputApplicable ? DividerKind::Input : DividerKind::Constraint;
    if ( requested == DividerKind::Constraint )
        return DividerKind::Constraint;
    return inputApplicable && query.inputVariables.size() <= kInputDividerMaxDimension ? DividerKind::Input
                                                                                      : DividerKind::Constraint;
}

Query restrictQuery( const Query &query, const SubQuery &sub )
{
    Query q = query;
    for ( const BoundUpdate &u : sub.region )
        q.bounds.tighten( u );
    return q;
}

std::vector<SubQuery> divideInput( const Query &query, const SubQuery &sub, unsigned k )
{
    if ( !inputsBounded( query ) )
        throw UsageError( "input splitting needs finitely bounded inputs" );
    std::vector<SubQuery> regions{ sub };
    for ( unsigned level = 0; level < k; ++level )
    {
        std::vector<SubQuery> next;
        for ( const SubQuery &r : regions )
        {
            Query restricted = restrictQuery( query, r );
            VariableId widest = query.inputVariables.front();
            double width = -1;
            for ( VariableId v : query.inputVariables )
            {
                double w = restricted.bounds.upper( v ) - restricted.bounds.lower( v );
                if ( w > width )
                {
                    width = w;
                    widest = v;
                }
            }
            double mid = 0.5 * ( restricted.bounds.lower( widest ) + restricted.bounds.upper( widest ) );
            for ( Side side : { Side::Upper, Side::Lower } )
            {
                SubQuery child = r;
                child.depth = r.depth + 1;
                child.region.push_back( { widest, side, mid } );
                next.push_back( std::move( child ) );
            }
        }
        regions = std::move( next );
    }
    return regions;
}

std::vector<SubQuery> divideConstraint( const Query &query, const SubQuery &sub, const EngineOptions &options )
{
    Query restricted = restrictQuery( query, sub );
    EngineOptions probe = options;
    probe.produceProof = false;
    probe.cancel = nullptr;
    std::optional<unsigned> constraint = Engine( restricted, probe ).pickRootSplit();
    if ( !constraint )
        throw UsageError( "the region is decided without splitting" );
    std::vector<SubQuery> children;
    const PLConstraint &c = restricted.constraints[*constraint];
    for ( unsigned i = 0; i < c.numCases(); ++i )
    {
        SubQuery child = sub;
        child.depth = sub.depth + 1;
        for ( const BoundUpdate &u : c.caseSplit( i ) )
            child.region.push_back( u );
        children.push_back( std::move( child ) );
    }
    return children;
}

namespace {

class SncRun
{
public:
    SncRun( const Query &raw, const EngineOptions &options, const SncOptions &snc )
        : _raw( raw )
        , _options( options )
        , _snc( snc )
        , _start( Clock::now() )
    {
    }

    SolveResult run()
    {
        PreprocessResult pre = preprocess( _raw );
        SolveResult result;
        if ( pre.report.infeasible )
        {
            result.status = SolveStatus::Unsat;
            return result;
        }
        _query = &pre.query;
        _divider = chooseDivider( pre.query, _snc.divider );

        SubQuery root;
        root.budget = _snc.initialTimeout;
        for ( SubQuery &s : divide( root, _snc.initialSplits ) )
            _pool.push_back( std::move( s ) );
        _stats.subqueriesCreated = _pool.size();

        std::vector<std::thread> threads;
        for ( unsigned w = 0; w < std::max( 1u, _snc.workers ); ++w )
            threads.emplace_back( [this] { work(); } );
        for ( std::thread &t : threads )
            t.join();

        _stats.subqueriesCancelled += _pool.size();
        _pool.clear();
        if ( _winner )
        {
            result = std::move( *_winner );
            liftAndVerify( _raw, pre.report, result );
        }
        else if ( _timedOut )
            result.status = SolveStatus::Timeout;
        else if ( _sawUnknown )
            result.status = SolveStatus::Unknown;
        else
            result.status = SolveStatus::Unsat;
        result.stats = _stats;
        result.stats.timeMs = static_cast<uint64_t>( secondsSince( _start ) * 1000 );
        return result;
    }

private:
    std::vector<SubQuery> divide( const SubQuery &sub, unsigned k )
    {
        if ( _divider == DividerKind::Input )
            return divideInput( *_query, sub, k );
        std::vector<SubQuery> regions{ sub };
        for ( unsigned level = 0; level < k; ++level )
        {
            std::vector<SubQuery> next;
            for ( const SubQuery &r : regions )
            {
                try
                {
                    for ( SubQuery &child : divideConstraint( *_query, r, _options ) )
                        next.push_back( std::move( child ) );
                }
                catch ( const UsageError & )
                {
                    // Decided at its root: solve it as it is.
                    next.push_back( r );
                }
            }
            regions = std::move( next );
        }
        return regions;
    }

    double remaining() const
    {
        return _options.timeoutSeconds > 0 ? _options.timeoutSeconds - secondsSince( _start ) : kInfinity;
    }

    void work()
    {
        while ( true )
        {
            SubQuery sub;
            {
                std::unique_lock lock( _mutex );
                _wake.wait( lock, [this] { return _done || !_pool.empty() || _inFlight == 0; } );
                if ( _done || _pool.empty() )
                {
                    _wake.notify_all();
                    return;
                }
                sub = std::move( _pool.front() );
                _pool.pop_front();
                ++_inFlight;
            }

            double left = remaining();
            SolveResult r;
            if ( left <= 0 )
                r.status = SolveStatus::Timeout;
            else
            {
                EngineOptions options = _options;
                options.produceProof = false;
                options.cancel = &_cancel;
                double budget = sub.budget > 0 ? sub.budget : kInfinity;
                double limit = std::min( budget, left );
                options.timeoutSeconds = std::isfinite( limit ) ? limit : 0;
                r = Engine( restrictQuery( *_query, sub ), options ).solve();
            }

            std::vector<SubQuery> children;
            bool globalTimeout = _options.timeoutSeconds > 0 && remaining() <= 0;
            if ( r.status == SolveStatus::Timeout && !globalTimeout && !_cancel.load() )
            {
                SubQuery scaled = sub;
                scaled.budget = sub.budget * _snc.timeoutFactor;
                children = divide( scaled, std::max( 1u, _snc.initialSplits ) );
                for ( SubQuery &c : children )
                    c.budget = scaled.budget;
            }

            std::lock_guard lock( _mutex );
            _stats += r.stats;
            switch ( r.status )
            {
            case SolveStatus::Sat:
                ++_stats.subqueriesSolved;
                if ( !_winner )
                {
                    _winner = std::move( r );
                    _done = true;
                    _cancel.store( true );
                }
                break;
            case SolveStatus::Unsat:
                ++_stats.subqueriesSolved;
                break;
            case SolveStatus::Timeout:
                if ( children.empty() )
                {
                    ++_stats.subqueriesCancelled;
                    if ( globalTimeout )
                    {
                        _timedOut = true;
                        _done = true;
                        _cancel.store( true );
                    }
                }
                else
                {
                    ++_stats.subqueriesRedivided;
                    _stats.subqueriesCreated += children.size();
                    for ( SubQuery &c : children )
                        _pool.push_back( std::move( c ) );
                }
                break;
            case SolveStatus::Unknown:
                if ( _cancel.load() )
                    ++_stats.subqueriesCancelled;
                else
                {
                    ++_stats.subqueriesSolved;
                    _sawUnknown = true;
                }
                break;
            }
            --_inFlight;
            _wake.notify_all();
        }
    }

    const Query &_raw;
    const EngineOptions &_options;
    const SncOptions &_snc;
    Clock::time_point _start;
    const Query *_query = nullptr;
    DividerKind _divider = DividerKind::Constraint;

    std::mutex _mutex;
    std::condition_variable _wake;
    std::deque<SubQuery> _pool;
    unsigned _inFlight = 0;
    bool _done = false;
    bool _timedOut = false;
    bool _sawUnknown = false;
    std::optional<SolveResult> _winner;
    std::atomic<bool> _cancel{ false };
    SolveStats _stats;
};

} // namespace

SolveResult runSnc( const Query &query, const EngineOptions &options, const SncOptions &snc )
{
    if ( options.produceProof )
        return solveQuery( query, options );
    return SncRun( query, options, snc ).run();
}

SolveResult runPortfolio( const Query &query, const EngineOptions &options, unsigned workers )
{
    if ( workers <= 1 || options.produceProof )
        return solveQuery( query, options );
    auto start = Clock::now();
    PreprocessResult pre = preprocess( query );
    if ( pre.report.infeasible )
    {
        SolveResult r;
        r.status = SolveStatus::Unsat;
        return r;
    }

    std::mutex mutex;
    std::atomic<bool> cancel{ false };
    std::optional<SolveResult> winner;
    bool anyTimeout = false;
    SolveStats total;
    std::vector<std::thread> threads;
    for ( unsigned i = 0; i < workers; ++i )
        threads.emplace_back( [&, i] {
            EngineOptions o = options;
            o.seed = options.seed + i;
            o.cancel = &cancel;
            SolveResult r = Engine( pre.query, o ).solve();
            std::lock_guard lock( mutex );
            total += r.stats;
            ++total.subqueriesCreated;
            bool definitive = r.status == SolveStatus::Sat || r.status == SolveStatus::Unsat;
            if ( definitive && !winner )
            {
                ++total.subqueriesSolved;
                winner = std::move( r );
                cancel.store( true );
            }
            else if ( cancel.load() && r.status == SolveStatus::Unknown )
                ++total.subqueriesCancelled;
            else
            {
                ++total.subqueriesSolved;
                anyTimeout = anyTimeout || r.status == SolveStatus::Timeout;
            }
        } );
    for ( std::thread &t : threads )
        t.join();

    SolveResult result;
    if ( winner )
    {
        result = std::move( *winner );
        liftAndVerify( query, pre.report, result );
    }
    else
        result.status = anyTimeout ? SolveStatus::Timeout : SolveStatus::Unknown;
    result.stats = total;
    result.stats.timeMs = static_cast<uint64_t>( secondsSince( start ) * 1000 );
    return result;
}

} // namespace nnv
