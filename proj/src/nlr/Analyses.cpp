#include "nnv/NetworkReasoner.h"
#include "nnv/Simplex.h"

#include <algorithm>
#include <cmath>
#include <set>

namespace nnv::nlr {

namespace {

bool finite( const Interval &i )
{
    return std::isfinite( i.lower ) && std::isfinite( i.upper );
}

Interval intersect( Interval a, const Interval &b )
{
    a.lower = std::max( a.lower, b.lower );
    a.upper = std::min( a.upper, b.upper );
    return a;
}

double leaky( double x, double alpha )
{
    return x >= 0 ? x : alpha * x;
}

// Interval image of one neuron given its source intervals.
Interval propagate( const Layer &layer, const Neuron &n, const LayerIntervals &iv )
{
    auto at = [&]( const NeuronRef &r ) { return iv[r.layer][r.neuron]; };
    Interval x = n.sources.empty() ? Interval{} : at( n.sources[0] );
    switch ( layer.kind )
    {
    case LayerKind::Input:
        return {};
    case LayerKind::WeightedSum:
    {
        Interval out{ n.bias, n.bias };
        for ( const WeightedTerm &t : n.terms )
        {
            if ( t.weight == 0 )
                continue;
            Interval s = at( t.source );
            out.lower += t.weight > 0 ? t.weight * s.lower : t.weight * s.upper;
            out.upper += t.weight > 0 ? t.weight * s.upper : t.weight * s.lower;
        }
        return out;
    }
    case LayerKind::Relu:
        return { std::max( 0.0, x.lower ), std::max( 0.0, x.upper ) };
    case LayerKind::LeakyRelu:
        return { leaky( x.lower, n.alpha ), leaky( x.upper, n.alpha ) };
    case LayerKind::Abs:
        if ( x.lower >= 0 )
            return x;
        if ( x.upper <= 0 )
            return { -x.upper, -x.lower };
        return { 0, std::max( -x.lower, x.upper ) };
    case LayerKind::Sign:
        return { x.lower >= 0 ? 1.0 : -1.0, x.upper >= 0 ? 1.0 : -1.0 };
    case LayerKind::Max:
    {
        Interval out{ -kInfinity, -kInfinity };
        for ( const NeuronRef &r : n.sources )
        {
            out.lower = std::max( out.lower, at( r ).lower );
            out.upper = std::max( out.upper, at( r ).upper );
        }
        return out;
    }
    }
    return {};
}

// Linear bounds a*x + b <= y <= c*x + d of a single-input activation over x in [l, u].
struct Relaxation
{
    double lowerSlope = 0, lowerConstant = 0;
    double upperSlope = 0, upperConstant = 0;
};

Relaxation constantRelaxation( const Interval &image )
{
    return { 0, image.lower, 0, image.upper };
}

// DeepPoly picks the lower slope from {identity, other phase} by area; the
// symbolic pass instead keeps the simpler lower face (zero for ReLU and Abs).
Relaxation relax( LayerKind kind, double alpha, const Interval &x, bool deepPolyLower )
{
    const double l = x.lower, u = x.upper;
    switch ( kind )
    {
    case LayerKind::Relu:
        if ( l >= 0 )
            return { 1, 0, 1, 0 };
        if ( u <= 0 )
            return { 0, 0, 0, 0 };
        if ( !finite( x ) )
            return constantRelaxation( { 0, std::max( 0.0, u ) } );
        {
            double s = u / ( u - l );
            double lambda = deepPolyLower && u >= -l ? 1 : 0;
            return { lambda, 0, s, -s * l };
        }
    case LayerKind::LeakyRelu:
        if ( l >= 0 )
            return { 1, 0, 1, 0 };
        if ( u <= 0 )
            return { alpha, 0, alpha, 0 };
        if ( !finite( x ) )
            return constantRelaxation( { leaky( l, alpha ), leaky( u, alpha ) } );
        {
            double s = ( u - alpha * l ) / ( u - l );
            double lambda = deepPolyLower && u >= -l ? 1 : alpha;
            return { lambda, 0, s, alpha * l - s * l };
        }
    case LayerKind::Abs:
        if ( l >= 0 )
            return { 1, 0, 1, 0 };
        if ( u <= 0 )
            return { -1, 0, -1, 0 };
        if ( !finite( x ) )
            return constantRelaxation( { 0, std::max( -l, u ) } );
        {
            double s = ( u + l ) / ( u - l );
            double lambda = !deepPolyLower ? 0 : u >= -l ? 1 : -1;
            return { lambda, 0, s, -l - s * l };
        }
    case LayerKind::Sign:
        return constantRelaxation( { l >= 0 ? 1.0 : -1.0, u >= 0 ? 1.0 : -1.0 } );
    default:
        return {};
    }
}

// Max: lower bound by the source with the greatest lower bound (lowest index on
// ties); upper bound by that source when it dominates, by a constant otherwise.
struct MaxChoice
{
    unsigned best = 0;
    bool dominant = false;
    double upper = -kInfinity;
};

MaxChoice chooseMax( const Neuron &n, const LayerIntervals &iv )
{
    MaxChoice m;
    for ( unsigned i = 0; i < n.sources.size(); ++i )
    {
        const Interval &s = iv[n.sources[i].layer][n.sources[i].neuron];
        if ( s.lower > iv[n.sources[m.best].layer][n.sources[m.best].neuron].lower )
            m.best = i;
        m.upper = std::max( m.upper, s.upper );
    }
    double bestLower = iv[n.sources[m.best].layer][n.sources[m.best].neuron].lower;
    m.dominant = true;
    for ( unsigned i = 0; i < n.sources.size(); ++i )
        if ( i != m.best && iv[n.sources[i].layer][n.sources[i].neuron].upper > bestLower )
            m.dominant = false;
    return m;
}

class ResultBuilder
{
public:
    ResultBuilder( const NetworkTopology &topology, const BoundStore &bounds )
        : _topology( topology )
        , _bounds( bounds )
    {
        _result.intervals.resize( topology.layers.size() );
    }

    Interval storeInterval( const Neuron &n ) const
    {
        return { _bounds.lower( n.variable ), _bounds.upper( n.variable ) };
    }

    // Records the final interval of the next neuron of `layer`; false on an empty interval.
    bool record( unsigned layer, const Neuron &n, Interval computed )
    {
        Interval store = storeInterval( n );
        Interval out = intersect( computed, store );
        _result.intervals[layer].push_back( out );
        if ( out.lower > out.upper + tolerance::kFeasibility )
        {
            _result.infeasible = true;
            return false;
        }
        if ( out.lower > store.lower + tolerance::kTighten )
            _result.tightenings.push_back( { n.variable, Side::Lower, out.lower } );
        if ( out.upper < store.upper - tolerance::kTighten )
            _result.tightenings.push_back( { n.variable, Side::Upper, out.upper } );
        return true;
    }

    const LayerIntervals &intervals() const
    {
        return _result.intervals;
    }

    AnalysisResult take()
    {
        return std::move( _result );
    }

private:
    const NetworkTopology &_topology;
    const BoundStore &_bounds;
    AnalysisResult _result;
};

bool recordInputs( ResultBuilder &builder, const NetworkTopology &topology )
{
    for ( const Neuron &n : topology.inputLayer().neurons )
        if ( !builder.record( 0, n, builder.storeInterval( n ) ) )
            return false;
    return true;
}

// Linear expression over the input neurons.
struct InputExpression
{
    std::vector<double> coefficients;
    double constant = 0;

    static InputExpression constantOf( unsigned width, double value )
    {
        return { std::vector<double>( width, 0.0 ), value };
    }

    void addScaled( const InputExpression &other, double factor )
    {
        if ( factor == 0 )
            return;
        for ( size_t i = 0; i < coefficients.size(); ++i )
            coefficients[i] += factor * other.coefficients[i];
        constant += factor * other.constant;
    }

    double minimum( const std::vector<Interval> &box ) const
    {
        double v = constant;
        for ( size_t i = 0; i < coefficients.size(); ++i )
            if ( coefficients[i] != 0 )
                v += coefficients[i] > 0 ? coefficients[i] * box[i].lower : coefficients[i] * box[i].upper;
        return v;
    }

    double maximum( const std::vector<Interval> &box ) const
    {
        double v = constant;
        for ( size_t i = 0; i < coefficients.size(); ++i )
            if ( coefficients[i] != 0 )
                v += coefficients[i] > 0 ? coefficients[i] * box[i].upper : coefficients[i] * box[i].lower;
        return v;
    }
};

// Linear expression over the neurons of earlier layers.
struct NeuronExpression
{
    std::vector<WeightedTerm> terms;
    double constant = 0;
};

} // namespace

AnalysisResult intervalBoundPropagation( const NetworkTopology &topology, const BoundStore &bounds )
{
    ResultBuilder builder( topology, bounds );
    if ( !recordInputs( builder, topology ) )
        return builder.take();
    for ( size_t l = 1; l < topology.layers.size(); ++l )
    {
        const Layer &layer = topology.layers[l];
        for ( const Neuron &n : layer.neurons )
            if ( !builder.record( l, n, propagate( layer, n, builder.intervals() ) ) )
                return builder.take();
    }
    return builder.take();
}

AnalysisResult symbolicBoundPropagation( const NetworkTopology &topology, const BoundStore &bounds )
{
    ResultBuilder builder( topology, bounds );
    if ( !recordInputs( builder, topology ) )
        return builder.take();
    const unsigned width = topology.numInputs();
    const std::vector<Interval> &box = builder.intervals()[0];

    std::vector<std::vector<InputExpression>> lower( topology.layers.size() ), upper( topology.layers.size() );
    for ( unsigned i = 0; i < width; ++i )
    {
        InputExpression e = InputExpression::constantOf( width, 0 );
        e.coefficients[i] = 1;
        lower[0].push_back( e );
        upper[0].push_back( e );
    }

    for ( size_t l = 1; l < topology.layers.size(); ++l )
    {
        const Layer &layer = topology.layers[l];
        for ( const Neuron &n : layer.neurons )
        {
            InputExpression lo = InputExpression::constantOf( width, 0 );
            InputExpression hi = InputExpression::constantOf( width, 0 );
            const LayerIntervals &iv = builder.intervals();
            auto lowerOf = [&]( const NeuronRef &r ) -> const InputExpression & { return lower[r.layer][r.neuron]; };
            auto upperOf = [&]( const NeuronRef &r ) -> const InputExpression & { return upper[r.layer][r.neuron]; };

            if ( layer.kind == LayerKind::WeightedSum )
            {
                lo.constant = hi.constant = n.bias;
                for ( const WeightedTerm &t : n.terms )
                {
                    lo.addScaled( t.weight > 0 ? lowerOf( t.source ) : upperOf( t.source ), t.weight );
                    hi.addScaled( t.weight > 0 ? upperOf( t.source ) : lowerOf( t.source ), t.weight );
                }
            }
            else if ( layer.kind == LayerKind::Max )
            {
                MaxChoice m = chooseMax( n, iv );
                lo = lowerOf( n.sources[m.best] );
                hi = m.dominant ? upperOf( n.sources[m.best] ) : InputExpression::constantOf( width, m.upper );
            }
            else
            {
                const NeuronRef &src = n.sources[0];
                Relaxation r = relax( layer.kind, n.alpha, iv[src.layer][src.neuron], false );
                lo.constant = r.lowerConstant;
                hi.constant = r.upperConstant;
                lo.addScaled( r.lowerSlope > 0 ? lowerOf( src ) : upperOf( src ), r.lowerSlope );
                hi.addScaled( r.upperSlope > 0 ? upperOf( src ) : lowerOf( src ), r.upperSlope );
            }

            Interval symbolic{ lo.minimum( box ), hi.maximum( box ) };
            Interval computed = intersect( symbolic, propagate( layer, n, iv ) );
            if ( !builder.record( l, n, computed ) )
                return builder.take();
            // An expression with an infinite constant carries no information
            // beyond the concrete bound, which is finite-safe to propagate.
            const Interval &final = builder.intervals()[l].back();
            if ( !std::isfinite( lo.constant ) )
                lo = InputExpression::constantOf( width, final.lower );
            if ( !std::isfinite( hi.constant ) )
                hi = InputExpression::constantOf( width, final.upper );
            lower[l].push_back( std::move( lo ) );
            upper[l].push_back( std::move( hi ) );
        }
    }
    return builder.take();
}

AnalysisResult deepPoly( const NetworkTopology &topology, const BoundStore &bounds )
{
    ResultBuilder builder( topology, bounds );
    if ( !recordInputs( builder, topology ) )
        return builder.take();
    const size_t numLayers = topology.layers.size();
    std::vector<std::vector<NeuronExpression>> lower( numLayers ), upper( numLayers );
    lower[0].resize( topology.numInputs() );
    upper[0].resize( topology.numInputs() );

    // Back-substitutes sum(coefficients) through the relations of layers <= top
    // down to the input box; `upperBound` selects the direction.
    std::vector<std::vector<double>> coefficients( numLayers );
    auto concretize = [&]( unsigned top, unsigned neuron, bool upperBound ) {
        for ( size_t k = 0; k <= top; ++k )
            coefficients[k].assign( topology.layers[k].neurons.size(), 0.0 );
        coefficients[top][neuron] = 1;
        double constant = 0;
        for ( unsigned k = top; k >= 1; --k )
            for ( unsigned j = 0; j < coefficients[k].size(); ++j )
            {
                double c = coefficients[k][j];
                if ( c == 0 )
                    continue;
                const NeuronExpression &rel = ( c > 0 ) == upperBound ? upper[k][j] : lower[k][j];
                if ( rel.constant != 0 )
                    constant += c * rel.constant;
                for ( const WeightedTerm &t : rel.terms )
                    coefficients[t.source.layer][t.source.neuron] += c * t.weight;
            }
        const std::vector<Interval> &box = builder.intervals()[0];
        for ( unsigned i = 0; i < coefficients[0].size(); ++i )
        {
            double c = coefficients[0][i];
            if ( c == 0 )
                continue;
            constant += ( c > 0 ) == upperBound ? c * box[i].upper : c * box[i].lower;
        }
        return constant;
    };

    for ( unsigned l = 1; l < numLayers; ++l )
    {
        const Layer &layer = topology.layers[l];
        for ( unsigned j = 0; j < layer.neurons.size(); ++j )
        {
            const Neuron &n = layer.neurons[j];
            const LayerIntervals &iv = builder.intervals();
            NeuronExpression lo, hi;
            if ( layer.kind == LayerKind::WeightedSum )
            {
                lo.terms = hi.terms = n.terms;
                lo.constant = hi.constant = n.bias;
            }
            else if ( layer.kind == LayerKind::Max )
            {
                MaxChoice m = chooseMax( n, iv );
                lo.terms = { { n.sources[m.best], 1.0 } };
                if ( m.dominant )
                    hi.terms = lo.terms;
                else
                    hi.constant = m.upper;
            }
            else
            {
                const NeuronRef &src = n.sources[0];
                Relaxation r = relax( layer.kind, n.alpha, iv[src.layer][src.neuron], true );
                if ( r.lowerSlope != 0 )
                    lo.terms = { { src, r.lowerSlope } };
                if ( r.upperSlope != 0 )
                    hi.terms = { { src, r.upperSlope } };
                lo.constant = r.lowerConstant;
                hi.constant = r.upperConstant;
            }
            lower[l].push_back( std::move( lo ) );
            upper[l].push_back( std::move( hi ) );

            Interval symbolic{ concretize( l, j, false ), concretize( l, j, true ) };
            if ( !builder.record( l, n, intersect( symbolic, propagate( layer, n, iv ) ) ) )
                return builder.take();
        }
    }
    return builder.take();
}

AnalysisResult lpTightening( const NetworkTopology &topology, const BoundStore &bounds, Tableau &tableau )
{
    AnalysisResult result;
    std::set<VariableId> selected;
    for ( const Layer &layer : topology.layers )
        if ( layer.kind != LayerKind::Input && layer.kind != LayerKind::WeightedSum )
            for ( const Neuron &n : layer.neurons )
                for ( const NeuronRef &r : n.sources )
                    selected.insert( topology.layers[r.layer].neurons[r.neuron].variable );

    tableau.syncBounds( bounds );
    for ( VariableId v : selected )
    {
        LinearExpression objective;
        objective.addTerm( v, 1 );
        // Optima are accurate to the LP feasibility tolerance, so they are
        // backed off by that much before being claimed as bounds.
        for ( Side side : { Side::Lower, Side::Upper } )
        {
            LpOutcome out = side == Side::Lower ? tableau.solve( objective ) : tableau.maximize( objective );
            if ( out.status == LpStatus::Infeasible )
            {
                result.infeasible = true;
                return result;
            }
            if ( out.status != LpStatus::Optimal )
                continue;
            double slack = 10 * tolerance::kLp * ( 1 + std::abs( out.value ) );
            double value = side == Side::Lower ? out.value - slack : out.value + slack;
            bool tighter = side == Side::Lower ? value > bounds.lower( v ) + tolerance::kTighten
                                               : value < bounds.upper( v ) - tolerance::kTighten;
            if ( tighter )
                result.tightenings.push_back( { v, side, value } );
        }
    }
    return result;
}

} // namespace nnv::nlr
