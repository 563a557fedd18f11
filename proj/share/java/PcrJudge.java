// Batch front end for the Janino compiler used by the Java-language judge.
//
// One-shot:  PcrJudge [-classpath <path>] [-d <dir>] <file.java>...
// Server:    PcrJudge --serve
//   reads requests, one per line, tab separated:
//     COMPILE <classpath> <dest-dir> <file.java>...
//   and answers each with the one-shot output followed by a DONE line.
//
// Every file is compiled independently. Output is line-oriented:
//   UNIT <index>
//   DIAG <index> <line> <column> <message>     (tab separated)
//   END <index> <diagnostic-count>

import java.io.BufferedReader;
import java.io.File;
import java.io.InputStreamReader;
import java.util.ArrayList;
import java.util.List;

import org.codehaus.commons.compiler.CompileException;
import org.codehaus.commons.compiler.ErrorHandler;
import org.codehaus.commons.compiler.Location;
import org.codehaus.janino.Compiler;

public class PcrJudge {

    static final int MAX_DIAGNOSTICS = 50;

    static String clean(String message, Location location) {
        String m = message == null ? "" : message;
        if (location != null) {
            String prefix = location.toString() + ": ";
            while (m.startsWith(prefix)) m = m.substring(prefix.length());
        }
        return m.replace('\n', ' ').replace('\r', ' ').replace('\t', ' ').trim();
    }

    static void emit(int index, Location location, String message) {
        int line = location == null ? 0 : location.getLineNumber();
        int column = location == null ? 0 : location.getColumnNumber();
        System.out.println("DIAG\t" + index + "\t" + line + "\t" + column + "\t" + message);
    }

    static File[] parseClassPath(String path) {
        List<File> entries = new ArrayList<File>();
        String[] parts = path.split(File.pathSeparator);
        for (int k = 0; k < parts.length; k++) {
            if (parts[k].length() > 0) entries.add(new File(parts[k]));
        }
        return (File[]) entries.toArray(new File[entries.size()]);
    }

    // Returns the number of diagnostics reported for the unit.
    static int compileUnit(final int unit, String file, File[] classPath, File destination) {
        final int[] count = new int[1];
        final List<String> seen = new ArrayList<String>();
        System.out.println("UNIT\t" + unit);

        Compiler compiler = new Compiler();
        compiler.setSourceVersion(11);
        compiler.setTargetVersion(11);
        compiler.setClassPath(classPath);
        if (destination != null) compiler.setDestinationDirectory(destination, true);
        compiler.setWarningHandler(null);
        compiler.setCompileErrorHandler(new ErrorHandler() {
            public void handleError(String message, Location location) throws CompileException {
                String text = clean(message, location);
                String key = (location == null ? "" : location.toString()) + text;
                if (!seen.contains(key)) {
                    seen.add(key);
                    emit(unit, location, text);
                    count[0]++;
                }
                if (count[0] >= MAX_DIAGNOSTICS) throw new CompileException("too many errors", location);
            }
        });

        try {
            compiler.compile(new File[] { new File(file) });
        } catch (CompileException e) {
            // Parse errors bypass the handler; the summary exception after
            // handled errors carries no new information.
            if (count[0] == 0) {
                emit(unit, e.getLocation(), clean(e.getMessage(), e.getLocation()));
                count[0]++;
            }
        } catch (Throwable t) {
            emit(unit, null, "internal compiler error: " + clean(t.toString(), null));
            count[0]++;
        }
        System.out.println("END\t" + unit + "\t" + count[0]);
        return count[0];
    }

    static void serve() throws Exception {
        BufferedReader in = new BufferedReader(new InputStreamReader(System.in, "UTF-8"));
        String line;
        while ((line = in.readLine()) != null) {
            if (line.length() == 0) continue;
            String[] parts = line.split("\t", -1);
            if (parts[0].equals("COMPILE") && parts.length >= 3) {
                File[] classPath = parseClassPath(parts[1]);
                File destination = parts[2].length() == 0 ? null : new File(parts[2]);
                for (int i = 3; i < parts.length; i++) compileUnit(i - 3, parts[i], classPath, destination);
            }
            System.out.println("DONE");
            System.out.flush();
        }
    }

    public static void main(String[] args) throws Exception {
        if (args.length == 1 && args[0].equals("--serve")) {
            serve();
            return;
        }
        File[] classPath = new File[0];
        File destination = null;
        List<String> files = new ArrayList<String>();
        for (int i = 0; i < args.length; i++) {
            if (args[i].equals("-classpath") || args[i].equals("-cp")) {
                classPath = parseClassPath(args[++i]);
            } else if (args[i].equals("-d")) {
                destination = new File(args[++i]);
            } else {
                files.add(args[i]);
            }
        }
        boolean allClean = true;
        for (int index = 0; index < files.size(); index++) {
            if (compileUnit(index, (String) files.get(index), classPath, destination) > 0) allClean = false;
        }
        System.out.flush();
        System.exit(allClean ? 0 : 1);
    }
}
