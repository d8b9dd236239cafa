#include "nnv/Engine.h"

#include "nnv/BoundPropagator.h"
#include "nnv/Error.h"
#include "nnv/Preprocessor.h"
#include "nnv/Proof.h"
#include "nnv/Simplex.h"

#include <chrono>
#include <cmath>
#include <memory>
#include <random>

namespace nnv {

LinearExpression caseCost( const PLConstraint &c, unsigned caseIndex )
{
    LinearExpression cost;
    if ( !c.supportsSoI() )
        return cost;
    switch ( c.kind )
    {
    case PLKind::Relu:
        cost.addTerm( caseIndex == 0 ? c.aux[0] : c.f, 1 );
        break;
    case PLKind::LeakyRelu:
    case PLKind::Abs:
    case PLKind::Max:
        cost.addTerm( c.aux[caseIndex], 1 );
        break;
    default:
        break;
    }
    return cost;
}

LinearExpression soiCost( const Query &query, const PhasePattern &pattern )
{
    LinearExpression cost;
    for ( const auto &[id, caseIndex] : pattern )
        cost += caseCost( query.constraints[id], caseIndex );
    return cost;
}

void PseudocostTable::observe( unsigned constraintId, double reduction )
{
    Entry &e = _entries[constraintId];
    ++e.count;
    e.mean += ( reduction - e.mean ) / e.count;
}

unsigned PseudocostTable::count( unsigned constraintId ) const
{
    auto it = _entries.find( constraintId );
    return it == _entries.end() ? 0 : it->second.count;
}

double PseudocostTable::average( unsigned constraintId ) const
{
    auto it = _entries.find( constraintId );
    return it == _entries.end() ? 0 : it->second.mean;
}

unsigned PseudocostTable::pick( const std::vector<std::pair<unsigned, double>> &candidateViolations ) const
{
    if ( candidateViolations.empty() )
        throw UsageError( "no branching candidates" );
    unsigned best = candidateViolations.front().first;
    double bestScore = -kInfinity;
    for ( const auto &[id, violation] : candidateViolations )
    {
        double score = count( id ) ? average( id ) : violation;
        if ( score > bestScore || ( score == bestScore && id < best ) )
        {
            best = id;
            bestScore = score;
        }
    }
    return best;
}

void requireProofCompatible( const Query &query )
{
    for ( const PLConstraint &c : query.constraints )
        if ( c.kind != PLKind::Relu && c.kind != PLKind::Max )
            throw UnsupportedError( std::string( "proof production supports relu and max constraints only; found " ) +
                                    kindName( c.kind ) );
}

class Engine::Search
{
public:
    Search( const Query &query, const EngineOptions &options )
        : _q( query )
        , _options( options )
        , _proof( options.produceProof )
        , _bounds( query.bounds )
        , _tableau( query.equations, query.bounds )
        , _propagator( query )
        , _rng( options.seed )
        , _start( std::chrono::steady_clock::now() )
    {
        for ( const PLConstraint &c : query.constraints )
            if ( !c.normalized )
                throw UsageError( "the engine needs an aux-normalized query" );
        if ( _proof )
            requireProofCompatible( query );
        else if ( !options.analyses.empty() )
            _topology = nlr::inferTopology( query );
        _propagator.touchAll();
    }

    SolveResult run()
    {
        SolveResult result;
        if ( _proof )
            _root = std::make_shared<ProofNode>();
        try
        {
            result.status = search();
        }
        catch ( const NumericalError &e )
        {
            result.status = SolveStatus::Unknown;
            result.message = e.what();
        }
        if ( result.status == SolveStatus::Sat )
            result.assignment = _assignment;
        if ( result.status == SolveStatus::Unsat && _numericalTrouble )
        {
            result.status = SolveStatus::Unknown;
            result.message = "a search state could be neither refuted nor split";
        }
        if ( result.status == SolveStatus::Unsat && _proof )
            result.proof = _root;
        if ( result.status == SolveStatus::Unknown && result.message.empty() && cancelled() )
            result.message = "cancelled";
        finishStats( result.stats );
        return result;
    }

    std::optional<unsigned> rootSplit()
    {
        StateOutcome outcome = processState( nullptr );
        if ( outcome != StateOutcome::Branch )
            return std::nullopt;
        return _branch;
    }

private:
    enum class StateOutcome { Conflict, Sat, Branch, Stop };

    struct Frame
    {
        unsigned constraint = 0;
        std::vector<unsigned> order;
        unsigned next = 0;
        unsigned level = 0;
        ProofNode *node = nullptr;
        double parentViolation = 0;
    };

    SolveStatus search()
    {
        StateOutcome outcome = processState( _root.get() );
        std::vector<Frame> stack;
        while ( true )
        {
            switch ( outcome )
            {
            case StateOutcome::Sat:
                return SolveStatus::Sat;
            case StateOutcome::Stop:
                return stopStatus();
            case StateOutcome::Branch:
            {
                if ( stopRequested() )
                    return stopStatus();
                Frame frame;
                frame.constraint = _branch;
                frame.level = _bounds.level();
                frame.parentViolation = _stateViolation;
                const PLConstraint &c = _q.constraints[_branch];
                frame.order.push_back( _preferredCase );
                for ( unsigned i = 0; i < c.numCases(); ++i )
                    if ( i != _preferredCase )
                        frame.order.push_back( i );
                if ( _root )
                {
                    // The node this state was processed into.
                    frame.node = _currentNode;
                    frame.node->children.resize( c.numCases() );
                    for ( unsigned i = 0; i < c.numCases(); ++i )
                        frame.node->children[i].split = SplitLabel{ c.id, i };
                }
                stack.push_back( std::move( frame ) );
                outcome = enterNext( stack.back() );
                break;
            }
            case StateOutcome::Conflict:
                while ( !stack.empty() && stack.back().next == stack.back().order.size() )
                {
                    _bounds.pop( stack.back().level );
                    stack.pop_back();
                }
                if ( stack.empty() )
                    return SolveStatus::Unsat;
                if ( stopRequested() )
                    return stopStatus();
                outcome = enterNext( stack.back() );
                break;
            }
        }
    }

    StateOutcome enterNext( Frame &frame )
    {
        _bounds.pop( frame.level );
        unsigned caseIndex = frame.order[frame.next++];
        _bounds.push();
        ++_stats.splits;
        if ( cancelled() )
            ++_stats.splitsAfterCancel;
        ProofNode *child = _root ? &frame.node->children[caseIndex] : nullptr;
        for ( const BoundUpdate &u : _q.constraints[frame.constraint].caseSplit( caseIndex ) )
        {
            _bounds.tighten( u );
            _propagator.touch( u.variable );
        }
        StateOutcome outcome = processState( child );
        double after = outcome == StateOutcome::Conflict ? 0 : _stateViolation;
        _pseudocosts.observe( frame.constraint, std::max( 0.0, frame.parentViolation - after ) );
        return outcome;
    }

    // Propagation, network analyses, the LP check and DeepSoI on the current bounds.
    StateOutcome processState( ProofNode *node )
    {
        _currentNode = node;
        if ( _bounds.infeasible() )
            return conflict( node, SparseRay{} );
        if ( !propagate( node ) )
            return conflict( node, SparseRay{} );
        if ( !_proof && _topology && !runAnalyses() )
            return StateOutcome::Conflict;

        _tableau.syncBounds( _bounds );
        LpOutcome lp = _tableau.solve();
        ++_stats.lpSolves;
        _assignment = lp.assignment;
        bool lpFeasible = lp.status != LpStatus::Infeasible;
        if ( !lpFeasible )
        {
            SparseRay ray = sparsify( lp.rowMultipliers );
            if ( !node || checkContradiction( _q.equations, _bounds, ray ) )
                return conflict( node, ray );
            // The ray misses the certification margin; splitting further gives
            // leaves with larger margins. Only an unsplittable state keeps it.
            if ( !chooseBranch( {} ) )
            {
                ++_uncertifiedLeaves;
                return conflict( node, ray );
            }
            return StateOutcome::Branch;
        }

        if ( satisfied( _assignment ) )
            return StateOutcome::Sat;

        PhasePattern pattern;
        if ( _options.useSoI )
        {
            StateOutcome soi = runSoI( pattern );
            if ( soi != StateOutcome::Branch )
                return soi;
        }
        if ( !chooseBranch( pattern ) )
        {
            _numericalTrouble = true;
            return StateOutcome::Conflict;
        }
        return StateOutcome::Branch;
    }

    StateOutcome conflict( ProofNode *node, SparseRay ray )
    {
        if ( node )
            node->contradiction = std::move( ray );
        return StateOutcome::Conflict;
    }

    bool propagate( ProofNode *node )
    {
        unsigned before = _bounds.numTightenings();
        TightenOutcome outcome = _propagator.run( _bounds, node ? &node->lemmas : nullptr );
        _stats.tightenings += _bounds.numTightenings() - before;
        return outcome != TightenOutcome::Infeasible && !_bounds.infeasible();
    }

    bool runAnalyses()
    {
        for ( nlr::Analysis analysis : _options.analyses )
        {
            nlr::AnalysisResult r;
            switch ( analysis )
            {
            case nlr::Analysis::Ibp:
                r = nlr::intervalBoundPropagation( *_topology, _bounds );
                break;
            case nlr::Analysis::Symbolic:
                r = nlr::symbolicBoundPropagation( *_topology, _bounds );
                break;
            case nlr::Analysis::DeepPoly:
                r = nlr::deepPoly( *_topology, _bounds );
                break;
            case nlr::Analysis::Lp:
                r = nlr::lpTightening( *_topology, _bounds, _tableau );
                _stats.lpSolves += 1;
                break;
            }
            if ( r.infeasible )
                return false;
            for ( const BoundUpdate &u : r.tightenings )
            {
                TightenOutcome outcome = _bounds.tighten( u );
                if ( outcome == TightenOutcome::Infeasible )
                    return false;
                if ( outcome == TightenOutcome::Tightened )
                {
                    ++_stats.tightenings;
                    _propagator.touch( u.variable );
                }
            }
        }
        return propagate( nullptr );
    }

    bool satisfied( const std::vector<double> &values ) const
    {
        return satisfies( _q, values, tolerance::kFeasibility );
    }

    // Constraints with no case entailed by the bounds.
    std::vector<unsigned> openConstraints( bool soiOnly ) const
    {
        std::vector<unsigned> open;
        for ( unsigned i = 0; i < _q.constraints.size(); ++i )
        {
            const PLConstraint &c = _q.constraints[i];
            if ( soiOnly && !c.supportsSoI() )
                continue;
            if ( !c.satisfiedByBounds( _bounds ) )
                open.push_back( i );
        }
        return open;
    }

    double caseDistance( const CaseSplit &split, const std::vector<double> &values ) const
    {
        double d = 0;
        for ( const BoundUpdate &u : split )
            d += u.side == Side::Lower ? std::max( 0.0, u.value - values[u.variable] )
                                       : std::max( 0.0, values[u.variable] - u.value );
        return d;
    }

    unsigned nearestCase( unsigned constraint, const std::vector<double> &values ) const
    {
        const PLConstraint &c = _q.constraints[constraint];
        unsigned best = 0;
        double bestDistance = kInfinity;
        for ( unsigned i = 0; i < c.numCases(); ++i )
        {
            double d = caseDistance( c.caseSplit( i ), values );
            if ( d < bestDistance )
            {
                best = i;
                bestDistance = d;
            }
        }
        return best;
    }

    bool chooseBranch( const PhasePattern &pattern )
    {
        std::vector<std::pair<unsigned, double>> candidates;
        _stateViolation = 0;
        for ( unsigned i : openConstraints( false ) )
        {
            double v = _q.constraints[i].violation( _assignment );
            candidates.push_back( { i, v } );
            _stateViolation += v;
        }
        if ( candidates.empty() )
            return false;
        _branch = _pseudocosts.pick( candidates );
        auto it = pattern.find( _branch );
        _preferredCase = it != pattern.end() ? it->second : nearestCase( _branch, _assignment );
        return true;
    }

    double costValue( const LinearExpression &cost, const std::vector<double> &values ) const
    {
        return cost.evaluate( values );
    }

    std::optional<LpOutcome> minimiseCost( const PhasePattern &pattern )
    {
        LpOutcome out = _tableau.solve( soiCost( _q, pattern ) );
        ++_stats.lpSolves;
        if ( out.status != LpStatus::Optimal )
            return std::nullopt;
        return out;
    }

    // DeepSoI: stochastic local search over phase patterns of the open
    // SoI-capable constraints, each pattern scored by the LP minimum of its cost.
    StateOutcome runSoI( PhasePattern &best )
    {
        std::vector<unsigned> open = openConstraints( true );
        if ( open.empty() )
            return StateOutcome::Branch;
        PhasePattern pattern;
        for ( unsigned i : open )
        {
            const PLConstraint &c = _q.constraints[i];
            unsigned chosen = 0;
            double lowest = kInfinity;
            for ( unsigned k = 0; k < c.numCases(); ++k )
            {
                double v = costValue( caseCost( c, k ), _assignment );
                if ( v < lowest )
                {
                    lowest = v;
                    chosen = k;
                }
            }
            pattern[i] = chosen;
        }

        std::optional<LpOutcome> current = minimiseCost( pattern );
        if ( !current )
            return StateOutcome::Branch;
        best = pattern;
        double bestCost = current->value;
        std::vector<double> bestAssignment = current->assignment;
        std::uniform_real_distribution<double> uniform( 0, 1 );
        unsigned rejections = 0;
        for ( unsigned proposals = 0; proposals <= _options.soiProposalLimit; ++proposals )
        {
            if ( current->value <= kSoIZero && satisfied( current->assignment ) )
            {
                _assignment = current->assignment;
                return StateOutcome::Sat;
            }
            if ( proposals == _options.soiProposalLimit || rejections >= _options.soiRejectionLimit )
                break;
            if ( stopRequested() )
                return StateOutcome::Stop;

            // Flip a violated constraint, chosen with probability proportional to its term.
            std::vector<unsigned> violated;
            std::vector<double> weights;
            for ( const auto &[id, caseIndex] : pattern )
            {
                double v = costValue( caseCost( _q.constraints[id], caseIndex ), current->assignment );
                if ( v > kSoIZero )
                {
                    violated.push_back( id );
                    weights.push_back( v );
                }
            }
            if ( violated.empty() )
                break;
            unsigned flipped = violated[std::discrete_distribution<size_t>( weights.begin(), weights.end() )( _rng )];
            PhasePattern proposal = pattern;
            proposal[flipped] = flipTarget( flipped, pattern.at( flipped ), current->assignment );

            std::optional<LpOutcome> next = minimiseCost( proposal );
            ++_stats.soiProposals;
            if ( !next )
            {
                ++rejections;
                continue;
            }
            double delta = next->value - current->value;
            _pseudocosts.observe( flipped, std::abs( delta ) );
            bool accept = delta < 0 || uniform( _rng ) < std::exp( -delta / _options.soiTemperature );
            if ( !accept )
            {
                ++rejections;
                continue;
            }
            rejections = 0;
            pattern = std::move( proposal );
            current = std::move( next );
            if ( current->value < bestCost )
            {
                bestCost = current->value;
                best = pattern;
                bestAssignment = current->assignment;
            }
        }
        _assignment = bestAssignment;
        return StateOutcome::Branch;
    }

    // Two-case constraints flip to the other case; Max moves to the cheapest other case.
    unsigned flipTarget( unsigned id, unsigned currentCase, const std::vector<double> &values ) const
    {
        const PLConstraint &c = _q.constraints[id];
        if ( c.numCases() == 2 )
            return 1 - currentCase;
        unsigned target = currentCase == 0 ? 1 : 0;
        double lowest = kInfinity;
        for ( unsigned k = 0; k < c.numCases(); ++k )
        {
            if ( k == currentCase )
                continue;
            double v = costValue( caseCost( c, k ), values );
            if ( v < lowest )
            {
                lowest = v;
                target = k;
            }
        }
        return target;
    }

    bool cancelled() const
    {
        return _options.cancel && _options.cancel->load( std::memory_order_relaxed );
    }

    bool timedOut() const
    {
        return _options.timeoutSeconds > 0 && elapsedSeconds() >= _options.timeoutSeconds;
    }

    bool stopRequested()
    {
        if ( cancelled() )
            _stopReason = SolveStatus::Unknown;
        else if ( timedOut() )
            _stopReason = SolveStatus::Timeout;
        else
            return false;
        return true;
    }

    SolveStatus stopStatus() const
    {
        return _stopReason;
    }

    double elapsedSeconds() const
    {
        return std::chrono::duration<double>( std::chrono::steady_clock::now() - _start ).count();
    }

    void finishStats( SolveStats &stats )
    {
        _stats.pivots = _tableau.pivots();
        _stats.timeMs = static_cast<uint64_t>( elapsedSeconds() * 1000 );
        stats = _stats;
    }

    static constexpr double kSoIZero = 1e-9;

    const Query &_q;
    const EngineOptions &_options;
    const bool _proof;
    BoundStore _bounds;
    Tableau _tableau;
    BoundPropagator _propagator;
    std::optional<nlr::NetworkTopology> _topology;
    std::mt19937_64 _rng;
    PseudocostTable _pseudocosts;
    SolveStats _stats;
    std::chrono::steady_clock::time_point _start;

    std::shared_ptr<ProofNode> _root;
    ProofNode *_currentNode = nullptr;
    std::vector<double> _assignment;
    unsigned _branch = 0;
    unsigned _preferredCase = 0;
    double _stateViolation = 0;
    bool _numericalTrouble = false;
    unsigned _uncertifiedLeaves = 0;
    SolveStatus _stopReason = SolveStatus::Unknown;
};

Engine::Engine( const Query &normalized, EngineOptions options )
    : _query( normalized )
    , _options( std::move( options ) )
{
}

Engine::~Engine() = default;

SolveResult Engine::solve()
{
    return Search( _query, _options ).run();
}

std::optional<unsigned> Engine::pickRootSplit()
{
    return Search( _query, _options ).rootSplit();
}

void liftAndVerify( const Query &query, const PreprocessReport &report, SolveResult &result )
{
    if ( result.status != SolveStatus::Sat )
        return;
    Assignment lifted = lift( report, result.assignment );
    if ( auto violation = findViolation( query, lifted, tolerance::kFeasibility ) )
    {
        result.status = SolveStatus::Unknown;
        result.message = "witness failed verification: " + *violation;
        result.assignment.clear();
    }
    else
        result.assignment = std::move( lifted );
}

SolveResult solveQuery( const Query &query, const EngineOptions &options )
{
    auto start = std::chrono::steady_clock::now();
    if ( options.produceProof )
        requireProofCompatible( query );
    PreprocessOptions preprocessOptions;
    preprocessOptions.simplify = !options.produceProof;
    PreprocessResult pre = preprocess( query, preprocessOptions );

    SolveResult result;
    if ( pre.report.infeasible )
        result.status = SolveStatus::Unsat;
    else
    {
        result = Engine( pre.query, options ).solve();
        liftAndVerify( query, pre.report, result );
    }
    result.stats.timeMs = static_cast<uint64_t>(
        std::chrono::duration<double, std::milli>( std::chrono::steady_clock::now() - start ).count() );
    return result;
}

} // namespace nnv
