/** Bundled annotator guidelines, shown verbatim above every task.
 * Versioned so studies can cite the exact wording in effect. */

export const GUIDELINES_VERSION = "1";

export const GUIDELINES: Record<string, string> = {
  bws_judgment: [
    "You will see one news update and three background summaries in random order.",
    "A good background gives you the history you need to understand the update,",
    "without requiring you to read anything else. Pick the most helpful summary",
    "as BEST and the least helpful as WORST (they must differ), then briefly",
    "justify your choices.",
  ].join(" "),
  qa_questions: [
    "Read the news update as if you had no prior knowledge of the story.",
    "Write five background questions you would want answered before you could",
    "fully understand this update. Ask about earlier events, people, places,",
    "or causes - not about details already stated in the update itself.",
  ].join(" "),
  qa_answers: [
    "Answer each question using only the background summary shown below the",
    "update. Copy or paraphrase the relevant part of the background as your",
    "answer. If the background does not contain the answer, mark \"none\".",
  ].join(" "),
};
