"""Gauss-Legendre nodes and weights on the reference element [0, 1].

Generated once at 40 significant digits and truncated to 22; the oracle
re-checks them against monomial integrals at import time.
"""

GAUSS_LEGENDRE_01 = {
    1: (
        (0.5,),
        (1.0,),
    ),
    2: (
        (0.2113248654051871177454, 0.7886751345948128822546),
        (0.5, 0.5),
    ),
    3: (
        (0.1127016653792583114821, 0.5, 0.8872983346207416885179),
        (0.2777777777777777777778, 0.4444444444444444444444, 0.2777777777777777777778),
    ),
    4: (
        (0.06943184420297371238803, 0.3300094782075718675987, 0.6699905217924281324013, 0.930568155797026287612),
        (0.1739274225687269286865, 0.3260725774312730713135, 0.3260725774312730713135, 0.1739274225687269286865),
    ),
    5: (
        (0.04691007703066800360119, 0.2307653449471584544818, 0.5, 0.7692346550528415455182, 0.9530899229693319963988),
        (0.1184634425280945437571, 0.2393143352496832340206, 0.2844444444444444444444, 0.2393143352496832340206, 0.1184634425280945437571),
    ),
    6: (
        (0.03376524289842398609385, 0.1693953067668677431693, 0.3806904069584015456847, 0.6193095930415984543153, 0.8306046932331322568307, 0.9662347571015760139062),
        (0.08566224618958517252015, 0.1803807865240693037849, 0.2339569672863455236949, 0.2339569672863455236949, 0.1803807865240693037849, 0.08566224618958517252015),
    ),
    7: (
        (0.02544604382862073773691, 0.1292344072003027800681, 0.2970774243113014165467, 0.5, 0.7029225756886985834533, 0.8707655927996972199319, 0.9745539561713792622631),
        (0.06474248308443484663531, 0.1398526957446383339507, 0.1909150252525594724752, 0.2089795918367346938776, 0.1909150252525594724752, 0.1398526957446383339507, 0.06474248308443484663531),
    ),
    8: (
        (0.01985507175123188415822, 0.1016667612931866302042, 0.2372337950418355070911, 0.4082826787521750975303, 0.5917173212478249024697, 0.7627662049581644929089, 0.8983332387068133697958, 0.9801449282487681158418),
        (0.05061426814518812957627, 0.1111905172266872352722, 0.156853322938943643669, 0.1813418916891809914826, 0.1813418916891809914826, 0.156853322938943643669, 0.1111905172266872352722, 0.05061426814518812957627),
    ),
    9: (
        (0.01591988024618695508221, 0.08198444633668210285029, 0.1933142836497048013456, 0.3378732882980955354807, 0.5, 0.6621267117019044645193, 0.8066857163502951986544, 0.9180155536633178971497, 0.9840801197538130449178),
        (0.04063719418078720598595, 0.09032408034742870202924, 0.1303053482014677311594, 0.1561735385200014200343, 0.1651196775006298815823, 0.1561735385200014200343, 0.1303053482014677311594, 0.09032408034742870202924, 0.04063719418078720598595),
    ),
    10: (
        (0.01304673574141413996102, 0.06746831665550774463395, 0.1602952158504877968828, 0.2833023029353764046004, 0.4255628305091843945576, 0.5744371694908156054424, 0.7166976970646235953996, 0.8397047841495122031172, 0.932531683344492255366, 0.986953264258585860039),
        (0.03333567215434406879678, 0.07472567457529029657289, 0.1095431812579910219978, 0.1346333596549981775456, 0.1477621123573764350869, 0.1477621123573764350869, 0.1346333596549981775456, 0.1095431812579910219978, 0.07472567457529029657289, 0.03333567215434406879678),
    ),
}
