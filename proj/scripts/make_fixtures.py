#!/usr/bin/env python3
"""Regenerates the bundled knowledge-base fixture files under fixtures/.

The pipeline cannot redistribute licensed annotation databases, so it ships
synthetic-but-plausible annotation stores with the same field layout the
loaders expect:

    genes.ann    JSONL, one gene per line; 271-gene panel
    drugs.ann    JSONL, one drug per line; 64 drugs (38 anti-cancer + 26 supportive)
    aliases.map  JSONL, alias -> canonical symbol rows
    classes.map  JSONL, one class per line; 27 classes partitioning the 64 drugs

All content is deterministic: re-running this script reproduces the files
byte for byte.
"""

import hashlib
import json
import os
import sys

OUT_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "fixtures")

# ---------------------------------------------------------------------------
# Gene panel: 271 cancer-related genes, HGNC symbols.
# ---------------------------------------------------------------------------

PANEL = """
ABL1 ABL2 AKT1 AKT2 AKT3 ALK APC AR ARAF ARID1A ARID1B ARID2 ASXL1 ATM
ATR ATRX AURKA AXIN1 AXL B2M BAP1 BARD1 BCL2 BCL6 BCOR BLM BRAF BRCA1
BRCA2 BRD4 BRIP1 BTK CALR CARD11 CASP8 CBL CCND1 CCND2 CCNE1 CD274 CD74 CDH1
CDK12 CDK4 CDK6 CDKN1B CDKN2A CDKN2B CHEK1 CHEK2 CIC CREBBP CRKL CSF1R CTCF CTLA4
CTNNB1 CUL3 CYLD DAXX DDR2 DICER1 DNMT1 DNMT3A DOT1L EED EGFR EP300 EPCAM EPHA2
ERBB2 ERBB3 ERBB4 ERCC2 ERG ERRFI1 ESR1 EZH2 FANCA FANCC FANCD2 FAS FAT1 FBXW7
FGFR1 FGFR2 FGFR3 FGFR4 FH FLCN FLT3 FLT4 FOXA1 GATA2 GATA3 GNAQ GNAS GSK3B
HGF HRAS IDH1 IDH2 IGF1R IGF2 IKBKE INPP4B JAK1 JAK2 JAK3 JUN KDM5C KDM6A
KDR KEAP1 KIT KMT2A KMT2B KMT2C KMT2D KRAS LATS1 LATS2 LRP1B LYN MAP2K1 MAP2K2
MAP2K4 MAP3K1 MAPK1 MAPK3 MAX MCL1 MDM2 MDM4 MED12 MEN1 MET MITF MLH1 MRE11
MSH2 MSH6 MTOR MUTYH MYC MYCL MYCN NBN NCOR1 NF1 NF2 NFE2L2 NKX2-1 NOTCH1
NOTCH2 NOTCH3 NOTCH4 NPM1 NRAS NSD1 NTRK1 NTRK2 NTRK3 PAK1 PALB2 PARP1 PBRM1 PDCD1
PDGFRA PDGFRB PIK3C2B PIK3CA PIK3CB PIK3CD PIK3CG PIK3R1 PIK3R2 PIM1 PMS1 PMS2 POLD1 POLE
PPARG PPP2R1A PRDM1 PRKAR1A PRKCI PTCH1 PTEN PTPN11 PTPRD PTPRS PTPRT RAC1 RAD21 RAD50
RAD51 RAD51B RAD51C RAD51D RAF1 RARA RB1 RBM10 RECQL4 REL RET RHEB RHOA RICTOR
RIT1 RNF43 ROS1 RPS6KB1 RPTOR RUNX1 SDHA SDHB SDHC SDHD SETBP1 SETD2 SF3B1 SH2B3
SLX4 SMAD2 SMAD3 SMAD4 SMARCA4 SMARCB1 SMO SOCS1 SOX17 SOX2 SOX9 SPEN SPOP SRC
SRSF2 STAG2 STAT3 STAT5A STAT5B STK11 SUFU SYK TBX3 TCF7L2 TERT TET1 TET2 TGFBR1
TGFBR2 TNFAIP3 TNFRSF14 TOP1 TP53 TP63 TSC1 TSC2 TSHR U2AF1 VEGFA VHL WRN WT1
XPO1 ZFHX3 ZNF217 ZNF703 ZRSR2
""".split()

KEGG_POOL = [
    "MAPK signaling pathway", "PI3K-Akt signaling pathway", "Ras signaling pathway",
    "p53 signaling pathway", "Cell cycle", "Apoptosis", "Wnt signaling pathway",
    "Notch signaling pathway", "JAK-STAT signaling pathway", "mTOR signaling pathway",
    "ErbB signaling pathway", "VEGF signaling pathway", "TGF-beta signaling pathway",
    "Hippo signaling pathway", "Hedgehog signaling pathway", "NF-kappa B signaling pathway",
    "Focal adhesion", "DNA replication", "Mismatch repair", "Homologous recombination",
    "Nucleotide excision repair", "Base excision repair", "Cellular senescence",
    "Chromatin remodeling", "Central carbon metabolism in cancer", "FoxO signaling pathway",
]

GO_BP_POOL = [
    "negative regulation of transcription by RNA polymerase II",
    "positive regulation of cell population proliferation",
    "regulation of apoptotic process", "DNA damage response",
    "signal transduction by protein phosphorylation", "cell cycle arrest",
    "regulation of gene expression", "protein phosphorylation",
    "double-strand break repair via homologous recombination",
    "negative regulation of cell growth", "chromatin organization",
    "intracellular signal transduction", "angiogenesis",
    "regulation of mitotic cell cycle", "response to oxidative stress",
    "epithelial cell differentiation", "immune response",
]

GO_MF_POOL = [
    "protein binding", "ATP binding", "DNA binding",
    "transcription cis-regulatory region binding", "protein kinase activity",
    "protein serine/threonine kinase activity", "protein tyrosine kinase activity",
    "GTPase activity", "GTP binding", "zinc ion binding",
    "ubiquitin protein ligase activity", "chromatin binding",
    "transcription coactivator activity", "phosphatase activity",
    "identical protein binding", "enzyme binding",
]

FUNC_TEMPLATES = [
    "This gene encodes a {role} that regulates {theme}. Altered activity of the "
    "encoded protein has been associated with uncontrolled proliferation and "
    "tumor progression in multiple cancer types. {extra}",
    "The protein encoded by this gene functions as a {role} involved in {theme}. "
    "Somatic alterations at this locus are recurrently observed in solid tumors "
    "and can change downstream signaling output. {extra}",
    "This locus encodes a {role} with a central position in {theme}. Loss or gain "
    "of function variants perturb the balance between proliferation and cell "
    "death in affected tissues. {extra}",
]

ROLE_POOL = [
    "serine/threonine kinase", "receptor tyrosine kinase", "tumor suppressor protein",
    "GTPase signaling protein", "transcription factor", "chromatin remodeling enzyme",
    "DNA repair enzyme", "cell cycle checkpoint regulator", "scaffolding adaptor protein",
    "ubiquitin ligase component", "phosphatidylinositol kinase subunit",
]

THEME_POOL = [
    "growth factor signal transduction", "cell cycle checkpoint control",
    "genome stability maintenance", "programmed cell death",
    "chromatin accessibility and transcription", "receptor-mediated proliferation signaling",
    "developmental pathway signaling", "metabolic reprogramming of tumor cells",
]

EXTRA_POOL = [
    "Expression is broadly detected across adult tissues.",
    "Multiple transcript variants encoding distinct isoforms have been described.",
    "The gene is a frequent target of recurrent somatic mutation in sequencing studies.",
    "Pseudogenes of this locus are present elsewhere in the genome.",
    "Post-translational modification modulates the stability of the encoded protein.",
]

# Hand-written entries for the genes most exercised in tests and synthetic data.
CURATED_GENES = {
    "TP53": {
        "function_summary": (
            "This gene encodes a tumor suppressor protein with transcriptional "
            "activation, DNA binding, and oligomerization domains. The encoded "
            "protein responds to diverse cellular stresses to regulate expression "
            "of target genes, thereby inducing cell cycle arrest, apoptosis, "
            "senescence, or DNA repair. Mutations in this gene are associated "
            "with a wide variety of human cancers."
        ),
        "kegg_pathways": ["p53 signaling pathway", "Cell cycle", "MAPK signaling pathway",
                          "PI3K-Akt signaling pathway", "Apoptosis", "Cellular senescence"],
        "go_biological_processes": ["negative regulation of transcription by RNA polymerase II",
                                    "DNA damage response", "cell cycle arrest",
                                    "regulation of apoptotic process"],
        "go_molecular_functions": ["transcription cis-regulatory region binding",
                                   "DNA binding", "identical protein binding",
                                   "zinc ion binding"],
    },
    "KRAS": {
        "function_summary": (
            "This gene, a Kirsten ras oncogene homolog from the mammalian ras gene "
            "family, encodes a small GTPase that cycles between active GTP-bound "
            "and inactive GDP-bound states to transduce proliferative signals from "
            "cell surface receptors. Single amino acid substitutions lock the "
            "protein in the active state and are implicated in a variety of "
            "malignancies, including lung adenocarcinoma."
        ),
        "kegg_pathways": ["Ras signaling pathway", "MAPK signaling pathway",
                          "PI3K-Akt signaling pathway", "ErbB signaling pathway",
                          "Central carbon metabolism in cancer"],
        "go_biological_processes": ["positive regulation of cell population proliferation",
                                    "signal transduction by protein phosphorylation",
                                    "intracellular signal transduction"],
        "go_molecular_functions": ["GTPase activity", "GTP binding", "protein binding"],
    },
}

ALIASES = [
    ("P53-LIKE-ALIAS", "TP53"),
    ("P53", "TP53"),
    ("LFS1", "TP53"),
    ("KRAS2", "KRAS"),
    ("C-K-RAS", "KRAS"),
    ("ERBB1", "EGFR"),
    ("HER1", "EGFR"),
    ("HER2", "ERBB2"),
    ("NEU", "ERBB2"),
    ("CD246", "ALK"),
    ("MLL", "KMT2A"),
    ("MLL2", "KMT2D"),
    ("MLL3", "KMT2C"),
    ("B-RAF1", "BRAF"),
    ("EWSR2", "ERG"),
    ("PD-L1", "CD274"),
    ("B7-H1", "CD274"),
    ("FRAP1", "MTOR"),
    ("HDM2", "MDM2"),
    ("PSK-J3", "CDK4"),
    ("C-REL", "REL"),
    ("TITF1", "NKX2-1"),
]

# ---------------------------------------------------------------------------
# Drug registry: 64 drugs in 27 classes (38 anti-cancer, 26 supportive).
# ---------------------------------------------------------------------------

CLASSES = [
    # (class_id, display_name, category, [drug names])
    ("platinum_chemo", "Platinum-Based Chemotherapy", "anti_cancer",
     ["Cisplatin", "Carboplatin"]),
    ("taxane_chemo", "Taxane Chemotherapy", "anti_cancer",
     ["Paclitaxel", "Docetaxel"]),
    ("antimetabolite_chemo", "Antimetabolite Chemotherapy", "anti_cancer",
     ["Pemetrexed", "Gemcitabine"]),
    ("topoisomerase_inhibitors", "Topoisomerase Inhibitors", "anti_cancer",
     ["Etoposide", "Irinotecan", "Topotecan"]),
    ("vinca_alkaloids", "Vinca Alkaloids", "anti_cancer",
     ["Vinorelbine", "Vinblastine"]),
    ("alkylating_agents", "Alkylating Agents", "anti_cancer",
     ["Cyclophosphamide", "Ifosfamide"]),
    ("egfr_tki", "EGFR Tyrosine Kinase Inhibitors", "anti_cancer",
     ["Erlotinib", "Gefitinib", "Afatinib", "Osimertinib"]),
    ("alk_ros1_tki", "ALK/ROS1 Tyrosine Kinase Inhibitors", "anti_cancer",
     ["Crizotinib", "Alectinib", "Brigatinib", "Lorlatinib"]),
    ("kras_g12c_inhibitors", "KRAS G12C Inhibitors", "anti_cancer",
     ["Sotorasib", "Adagrasib"]),
    ("met_ret_trk_tki", "MET/RET/TRK Tyrosine Kinase Inhibitors", "anti_cancer",
     ["Capmatinib", "Selpercatinib", "Larotrectinib", "Entrectinib"]),
    ("braf_mek_inhibitors", "BRAF/MEK Inhibitors", "anti_cancer",
     ["Dabrafenib", "Trametinib"]),
    ("anti_vegf", "Anti-VEGF Agents", "anti_cancer",
     ["Bevacizumab", "Ramucirumab"]),
    ("pd1_pdl1_checkpoint_inhibitors", "PD-1/PD-L1 Checkpoint Inhibitors", "anti_cancer",
     ["Nivolumab", "Pembrolizumab", "Atezolizumab", "Durvalumab"]),
    ("ctla4_inhibitors", "CTLA-4 Checkpoint Inhibitors", "anti_cancer",
     ["Ipilimumab"]),
    ("targeted_antibody_agents", "Targeted Antibody Agents", "anti_cancer",
     ["Trastuzumab Deruxtecan", "Amivantamab"]),
    ("antiemetic_5ht3", "5-HT3 Receptor Antagonist Antiemetics", "supportive",
     ["Ondansetron", "Granisetron"]),
    ("nk1_antagonists", "NK-1 Receptor Antagonist Antiemetics", "supportive",
     ["Aprepitant", "Fosaprepitant"]),
    ("corticosteroids", "Systemic Corticosteroids", "supportive",
     ["Dexamethasone", "Prednisone"]),
    ("strong_opioids", "Strong Opioids", "supportive",
     ["Morphine", "Oxycodone", "Hydromorphone", "Fentanyl"]),
    ("weak_opioids", "Weak Opioids", "supportive",
     ["Tramadol", "Codeine"]),
    ("neuropathic_analgesics", "Neuropathic Pain Agents", "supportive",
     ["Gabapentin", "Pregabalin"]),
    ("myeloid_growth_factors", "Myeloid Growth Factors", "supportive",
     ["Filgrastim", "Pegfilgrastim"]),
    ("erythropoiesis_agents", "Erythropoiesis-Stimulating Agents", "supportive",
     ["Epoetin Alfa", "Darbepoetin Alfa"]),
    ("bone_modifying_agents", "Bone-Modifying Agents", "supportive",
     ["Zoledronic Acid", "Denosumab"]),
    ("anticoagulants", "Anticoagulants", "supportive",
     ["Enoxaparin", "Apixaban"]),
    ("acid_suppressants", "Acid Suppressants", "supportive",
     ["Omeprazole", "Pantoprazole"]),
    ("bowel_regimen", "Bowel Regimen Agents", "supportive",
     ["Senna", "Polyethylene Glycol"]),
]

DRUG_DESC_TEMPLATES = [
    "{name} is a {cat} agent administered in thoracic oncology practice. It is "
    "supplied in parenteral and oral formulations depending on the indication.",
    "{name} is a {cat} medication with established use in lung cancer care "
    "pathways and related supportive management.",
]

MECH_BY_CLASS = {
    "platinum_chemo": "Forms covalent platinum-DNA adducts that crosslink DNA strands, blocking replication and transcription and triggering apoptosis in rapidly dividing cells.",
    "taxane_chemo": "Stabilizes microtubule polymers and prevents depolymerization, arresting the cell cycle at the metaphase-anaphase transition.",
    "antimetabolite_chemo": "Inhibits folate-dependent enzymes and nucleotide synthesis, depleting precursors required for DNA replication.",
    "topoisomerase_inhibitors": "Traps topoisomerase cleavage complexes on DNA, converting transient breaks into lethal double-strand breaks during replication.",
    "vinca_alkaloids": "Binds tubulin and inhibits microtubule assembly, disrupting mitotic spindle formation.",
    "alkylating_agents": "Transfers alkyl groups onto DNA bases, producing inter-strand crosslinks and replication fork collapse.",
    "egfr_tki": "Occupies the ATP-binding pocket of the epidermal growth factor receptor kinase domain, suppressing downstream proliferative signaling.",
    "alk_ros1_tki": "Inhibits constitutively active ALK and ROS1 fusion kinases, silencing aberrant survival signaling.",
    "kras_g12c_inhibitors": "Covalently locks the mutant G12C form of KRAS in its inactive GDP-bound state.",
    "met_ret_trk_tki": "Selectively inhibits MET, RET, or TRK family kinases driving oncogenic signaling.",
    "braf_mek_inhibitors": "Blocks constitutive signaling through the BRAF-MEK-ERK cascade.",
    "anti_vegf": "Neutralizes vascular endothelial growth factor signaling, impairing tumor angiogenesis.",
    "pd1_pdl1_checkpoint_inhibitors": "Blocks the PD-1/PD-L1 immune checkpoint axis, restoring cytotoxic T-cell activity against tumor cells.",
    "ctla4_inhibitors": "Blocks CTLA-4 mediated inhibitory signaling during T-cell priming, broadening the antitumor immune response.",
    "targeted_antibody_agents": "Delivers antibody-directed activity against tumor surface targets, combining receptor blockade with effector mechanisms.",
    "antiemetic_5ht3": "Antagonizes serotonin 5-HT3 receptors on vagal afferents and in the chemoreceptor trigger zone.",
    "nk1_antagonists": "Blocks substance P binding at neurokinin-1 receptors in the central emetic circuit.",
    "corticosteroids": "Activates glucocorticoid receptors, broadly suppressing inflammatory gene expression.",
    "strong_opioids": "Agonizes mu-opioid receptors in the central nervous system, producing potent analgesia.",
    "weak_opioids": "Provides mixed weak mu-opioid agonism with monoamine reuptake inhibition for moderate pain.",
    "neuropathic_analgesics": "Modulates alpha-2-delta subunits of voltage-gated calcium channels, dampening neuropathic signaling.",
    "myeloid_growth_factors": "Stimulates granulocyte colony-stimulating factor receptors to accelerate neutrophil recovery.",
    "erythropoiesis_agents": "Activates erythropoietin receptors on erythroid progenitors to stimulate red cell production.",
    "bone_modifying_agents": "Suppresses osteoclast-mediated bone resorption at sites of skeletal metastasis.",
    "anticoagulants": "Inhibits coagulation factors to prevent thrombus formation and extension.",
    "acid_suppressants": "Suppresses gastric acid secretion by inhibiting the parietal cell proton pump.",
    "bowel_regimen": "Promotes intestinal motility and stool hydration to counteract opioid-induced constipation.",
}

IND_BY_CAT = {
    "anti_cancer": "Indicated for the treatment of non-small cell lung cancer and other solid tumors according to biomarker and line-of-therapy criteria.",
    "supportive": "Indicated for supportive management of treatment-related and disease-related symptoms in oncology patients.",
}

PD_TEMPLATES = [
    "Exposure-response relationships show dose-dependent target engagement with effects persisting beyond measurable plasma concentrations.",
    "Pharmacodynamic effect follows receptor occupancy, with onset within hours of administration and recovery after clearance.",
    "Steady-state activity is reached within several dosing intervals; effect magnitude correlates with cumulative exposure.",
]

TOX_TEMPLATES = [
    "Common adverse effects include fatigue, gastrointestinal upset, and myelosuppression; severe events require dose modification.",
    "Toxicity profile includes hypersensitivity reactions and organ-specific effects requiring periodic laboratory monitoring.",
    "Overdose may produce exaggerated pharmacologic effects; management is supportive with drug discontinuation.",
]


def pick(pool, seed_key, k):
    """Deterministic selection of k distinct items from pool keyed by seed_key."""
    h = hashlib.sha256(seed_key.encode()).digest()
    idx = []
    i = 0
    while len(idx) < k:
        v = int.from_bytes(h[(4 * i) % 28:(4 * i) % 28 + 4], "big") + i
        j = v % len(pool)
        if j not in idx:
            idx.append(j)
        i += 1
    return [pool[j] for j in idx]


def gene_record(symbol):
    if symbol in CURATED_GENES:
        rec = {"hgnc_symbol": symbol}
        rec.update(CURATED_GENES[symbol])
        return rec
    tpl = pick(FUNC_TEMPLATES, symbol + "|tpl", 1)[0]
    role = pick(ROLE_POOL, symbol + "|role", 1)[0]
    theme = pick(THEME_POOL, symbol + "|theme", 1)[0]
    extra = pick(EXTRA_POOL, symbol + "|extra", 2)
    summary = tpl.format(role=role, theme=theme, extra=" ".join(extra))
    return {
        "hgnc_symbol": symbol,
        "function_summary": summary,
        "kegg_pathways": pick(KEGG_POOL, symbol + "|kegg", 4),
        "go_biological_processes": pick(GO_BP_POOL, symbol + "|gobp", 4),
        "go_molecular_functions": pick(GO_MF_POOL, symbol + "|gomf", 3),
    }


def slug(name):
    return name.lower().replace(" ", "-")


def drug_record(name, class_id, category):
    drug_id = slug(name) + "-fixture"
    cat_word = "cytotoxic or targeted anti-cancer" if category == "anti_cancer" else "supportive care"
    desc = pick(DRUG_DESC_TEMPLATES, drug_id + "|d", 1)[0].format(name=name, cat=cat_word)
    return {
        "drug_id": drug_id,
        "name": name,
        "category": category,
        "description": desc,
        "mechanism_of_action": MECH_BY_CLASS[class_id],
        "indication": IND_BY_CAT[category],
        "pharmacodynamics": pick(PD_TEMPLATES, drug_id + "|pd", 1)[0],
        "toxicity": pick(TOX_TEMPLATES, drug_id + "|tox", 1)[0],
    }


def main():
    panel = sorted(set(PANEL))
    if len(panel) != 271:
        print(f"panel size {len(panel)} != 271; adjust PANEL list", file=sys.stderr)
        sys.exit(1)
    for sym, canon in ALIASES:
        if canon not in panel:
            print(f"alias target {canon} not in panel", file=sys.stderr)
            sys.exit(1)

    os.makedirs(OUT_DIR, exist_ok=True)

    with open(os.path.join(OUT_DIR, "genes.ann"), "w") as f:
        for sym in panel:
            f.write(json.dumps(gene_record(sym), sort_keys=True) + "\n")

    with open(os.path.join(OUT_DIR, "aliases.map"), "w") as f:
        for alias, canon in ALIASES:
            f.write(json.dumps({"alias": alias, "canonical": canon}, sort_keys=True) + "\n")

    n_drugs = 0
    n_anti = 0
    with open(os.path.join(OUT_DIR, "classes.map"), "w") as fc, \
         open(os.path.join(OUT_DIR, "drugs.ann"), "w") as fd:
        for class_id, display, category, names in CLASSES:
            ids = [slug(n) + "-fixture" for n in names]
            fc.write(json.dumps({"class_id": class_id, "display_name": display,
                                 "drugs": ids}, sort_keys=True) + "\n")
            for n in names:
                fd.write(json.dumps(drug_record(n, class_id, category), sort_keys=True) + "\n")
                n_drugs += 1
                n_anti += category == "anti_cancer"

    if len(CLASSES) != 27 or n_drugs != 64 or n_anti != 38:
        print(f"cardinality check failed: classes={len(CLASSES)} drugs={n_drugs} anti={n_anti}",
              file=sys.stderr)
        sys.exit(1)
    print(f"wrote fixtures: panel={len(panel)} classes={len(CLASSES)} drugs={n_drugs} "
          f"(anti_cancer={n_anti}, supportive={n_drugs - n_anti})")


if __name__ == "__main__":
    main()
